//! Intrinsic randomness: greedy extractors, their exact output laws, the
//! accompanying bounds, and the KL-criterion rate formulas.

mod composite;
mod greedy;
mod kl;
mod profile;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::f64::consts::LN_2;

use serde_json::{json, Value};

pub use kl::{
    build_kl_optimal_code, kl_rate_lower_bound, s_star_family, s_star_second_order, s_star_two,
    spread_kl_check, KlOptimalCode, LimitLaw, Order, SStar, SStarSecondOrder,
};
pub use profile::{BinGroup, KlDirection, Normalization, OutputProfile};

pub(crate) use composite::build_composite;
pub(crate) use greedy::{spread, ItemClass};

use crate::coding::{floor_log, BoundCheck};
use crate::error::{Error, Result};
use crate::sources::TypeClassTable;

/// Largest number of bins a materialized extractor may hold.
pub const MAX_BINS: u64 = 10_000_000;
/// Largest number of outcomes a materialized extractor may place.
pub const MAX_ITEMS: u128 = 10_000_000;

/// Anything with an output-load profile.
pub trait HasProfile {
    fn profile(&self) -> &OutputProfile;
}

impl HasProfile for OutputProfile {
    fn profile(&self) -> &OutputProfile {
        self
    }
}

/// Members of one class and the bins they went to.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAssignment {
    pub class: usize,
    /// `(bin, members)` pairs, bins ascending.
    pub bins: Vec<(usize, u64)>,
}

/// Materialized greedy extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct Extractor {
    pub n: u64,
    pub m: u64,
    pub assignment: Vec<ClassAssignment>,
    pub bin_loads: Vec<f64>,
    profile: OutputProfile,
}

impl HasProfile for Extractor {
    fn profile(&self) -> &OutputProfile {
        &self.profile
    }
}

#[derive(PartialEq)]
struct Bin(f64, usize);

impl Eq for Bin {}
impl PartialOrd for Bin {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Bin {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

/// Greedy extractor with `m` materialized bins: outcomes in descending
/// probability, each onto a least-loaded bin, ties to the lowest index.
pub fn build_extractor(table: &TypeClassTable, m: u64) -> Result<Extractor> {
    if m == 0 {
        return Err(Error::OutOfRange {
            name: "M",
            value: 0.0,
            range: "M >= 1",
        });
    }
    if m > MAX_BINS {
        return Err(Error::CapExceeded {
            what: "extractor bins",
            required: m as f64,
            cap: MAX_BINS as f64,
        });
    }
    let mut items: u128 = 0;
    for c in table.classes() {
        items = items.saturating_add(c.exact_count.unwrap_or(u128::MAX));
    }
    if items > MAX_ITEMS {
        return Err(Error::CapExceeded {
            what: "extractor outcomes",
            required: table.log_outcome_count().exp(),
            cap: MAX_ITEMS as f64,
        });
    }
    let mut heap: BinaryHeap<Reverse<Bin>> =
        (0..m as usize).map(|b| Reverse(Bin(0.0, b))).collect();
    let mut loads = vec![0.0; m as usize];
    let mut assignment = Vec::with_capacity(table.len());
    for &id in table.descending() {
        let c = table.class(id);
        let w = c.element_prob();
        let count = c.exact_count.unwrap() as u64;
        let mut bins: BTreeMap<usize, u64> = BTreeMap::new();
        if w == 0.0 {
            // weightless members all fit the current minimum bin
            let Reverse(Bin(_, b)) = heap.peek().unwrap();
            bins.insert(*b, count);
        } else {
            for _ in 0..count {
                let Reverse(Bin(load, b)) = heap.pop().unwrap();
                let next = load + w;
                loads[b] = next;
                *bins.entry(b).or_insert(0) += 1;
                heap.push(Reverse(Bin(next, b)));
            }
        }
        assignment.push(ClassAssignment {
            class: id,
            bins: bins.into_iter().collect(),
        });
    }
    let profile = OutputProfile::from_loads(table.n(), &loads);
    Ok(Extractor {
        n: table.n(),
        m,
        assignment,
        bin_loads: loads,
        profile,
    })
}

impl Extractor {
    /// Bin loads recomputed from the assignment.
    pub fn recomputed_loads(&self, table: &TypeClassTable) -> Vec<f64> {
        let mut loads = vec![0.0; self.m as usize];
        for a in &self.assignment {
            let w = table.class(a.class).element_prob();
            for &(b, k) in &a.bins {
                loads[b] += k as f64 * w;
            }
        }
        loads
    }
}

/// Greedy extractor evaluated at the level of bin groups; `M` may be
/// astronomically large.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualExtractor {
    pub n: u64,
    pub log_m: f64,
    /// Mass recovered by decoding each bin to its most probable preimage.
    pub first_item_mass: f64,
    profile: OutputProfile,
}

impl HasProfile for VirtualExtractor {
    fn profile(&self) -> &OutputProfile {
        &self.profile
    }
}

pub(crate) fn items_of<'a>(
    table: &'a TypeClassTable,
    ids: impl IntoIterator<Item = &'a usize>,
) -> Vec<ItemClass> {
    ids.into_iter()
        .map(|&id| {
            let c = table.class(id);
            ItemClass {
                log_count: c.log_count,
                exact_count: c.exact_count,
                log_weight: c.per_element_log_prob,
            }
        })
        .collect()
}

/// Greedy extractor of `floor(e^{log_m})` bins over a subset of classes
/// (given in descending probability).
pub(crate) fn virtual_over(table: &TypeClassTable, ids: &[usize], log_m: f64) -> VirtualExtractor {
    let log_m = floor_log(log_m.max(0.0));
    let s = spread(&items_of(table, ids), log_m);
    VirtualExtractor {
        n: table.n(),
        log_m,
        first_item_mass: s.first_item_mass,
        profile: OutputProfile {
            n: table.n(),
            log_m,
            groups: s.groups,
        },
    }
}

pub fn build_virtual_extractor(table: &TypeClassTable, log_m: f64) -> VirtualExtractor {
    virtual_over(table, table.descending(), log_m)
}

/// `½ Σ |q_i − 1/M|`.
pub fn extractor_distance(ext: &impl HasProfile) -> f64 {
    ext.profile().distance()
}

pub fn extractor_kl(ext: &impl HasProfile, direction: KlDirection, norm: Normalization) -> f64 {
    ext.profile().kl(direction, norm)
}

/// JSON summary; loads are bucketed when `M > 1000`.
pub fn extractor_summary(ext: &impl HasProfile) -> Value {
    let p = ext.profile();
    let m = p.log_m.exp();
    json!({
        "n": p.n,
        "M": if p.log_m <= 53.0 * LN_2 { json!(m.round()) } else { json!(null) },
        "log_M_nats": p.log_m,
        "distance": p.distance(),
        "kl_to_uniform": p.kl_to_uniform(),
        "kl_from_uniform": finite_or_null(p.kl_from_uniform()),
        "loads_histogram": p.histogram(if m <= 1000.0 { usize::MAX } else { 64 }),
    })
}

pub fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(null)
    }
}

/// Achievability bound `d <= p_n{p_n > 1/M'} + M/M'`.
pub fn achievability_check_extractor(
    table: &TypeClassTable,
    log_m: f64,
    distance: f64,
    log_m_prime: f64,
) -> BoundCheck {
    let rhs = table.mass_above(log_m_prime) + (log_m - log_m_prime).exp();
    BoundCheck {
        lhs: distance,
        rhs,
        holds: distance <= rhs + 1e-12,
    }
}

/// Converse bound `p_n{p_n > 1/M'} − M'/M <= d`.
pub fn converse_check_extractor(
    table: &TypeClassTable,
    log_m: f64,
    distance: f64,
    log_m_prime: f64,
) -> BoundCheck {
    let lhs = table.mass_above(log_m_prime) - (log_m_prime - log_m).exp();
    BoundCheck {
        lhs,
        rhs: distance,
        holds: lhs <= distance + 1e-12,
    }
}

/// Continuity bound `|ln M − H(q)| <= −δ ln(δ/M)` for `δ <= 1/4`; `None`
/// above that range.
pub fn fannes_check(ext: &impl HasProfile) -> Option<BoundCheck> {
    let p = ext.profile();
    let d = p.distance();
    if d > 0.25 {
        return None;
    }
    let lhs = (p.log_m - p.entropy()).abs();
    let rhs = if d == 0.0 {
        0.0
    } else {
        -d * (d.ln() - p.log_m)
    };
    Some(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// `k` points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![lo];
    }
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}

/// Best converse lower bound on the distance of any size-`M` extractor,
/// maximized over a grid of `M'`.
pub fn converse_distance_bound(table: &TypeClassTable, log_m: f64) -> f64 {
    linear_grid(0.0, log_m.max(0.0), 256)
        .into_iter()
        .map(|lp| converse_check_extractor(table, log_m, 0.0, lp).lhs)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeForDistance {
    pub log_size: f64,
    pub distance: f64,
    /// Converse lower bound on the distance of any extractor of that size.
    pub converse_bound: f64,
}

/// Largest `ln M` whose greedy extractor has distance `<= eps`.
///
/// Doubling over integer `M` up to `2^53`, then bisection; beyond that the
/// bisection runs on `ln M`. Greedy distance is not monotone in `M` at every
/// step, so the result is the upper end of the first crossing.
pub fn max_log_size_for_distance(table: &TypeClassTable, eps: f64) -> Result<SizeForDistance> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, 1)",
        });
    }
    let dist = |log_m: f64| build_virtual_extractor(table, log_m).profile.distance();
    let ok = |log_m: f64| dist(log_m) <= eps;
    // d >= 1 − |support|/M rules out everything beyond this
    let hi_log = table.log_support_size() - (1.0 - eps).ln() + 1.0;
    let int_cap: u64 = 1 << 53;
    let mut good: u64 = 1;
    let mut bad: Option<u64> = None;
    while good < int_cap && ((good * 2) as f64).ln() <= hi_log + LN_2 {
        let m = good * 2;
        if ok((m as f64).ln()) {
            good = m;
        } else {
            bad = Some(m);
            break;
        }
    }
    let log_size = match bad {
        Some(mut b) => {
            while b - good > 1 {
                let mid = good + (b - good) / 2;
                if ok((mid as f64).ln()) {
                    good = mid;
                } else {
                    b = mid;
                }
            }
            (good as f64).ln()
        }
        None if good >= int_cap => {
            let lo = (good as f64).ln();
            let hi = hi_log.max(lo + 1.0);
            floor_log(crate::optimize::bisect_boundary(ok, lo, hi, 1e-10))
        }
        None => (good as f64).ln(),
    };
    Ok(SizeForDistance {
        log_size,
        distance: dist(log_size),
        converse_bound: converse_distance_bound(table, log_size),
    })
}
