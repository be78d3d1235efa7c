use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::dist::FiniteDistribution;
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Default bound on the number of compositions a table may hold.
pub const DEFAULT_CLASS_CAP: usize = 10_000_000;

/// One class of equiprobable outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeClass {
    /// Symbol counts summing to `n`. Empty for tables built from explicit
    /// outcome lists.
    pub composition: Vec<u32>,
    /// `ln |class|`.
    pub log_count: f64,
    /// `|class|` when it fits in 128 bits.
    pub exact_count: Option<u128>,
    /// `ln p_n(ω)` for any member ω; `-inf` for impossible classes.
    pub per_element_log_prob: f64,
    /// `ln p_n(class)`.
    pub class_log_prob: f64,
}

impl TypeClass {
    pub fn prob(&self) -> f64 {
        self.class_log_prob.exp()
    }

    pub fn element_prob(&self) -> f64 {
        self.per_element_log_prob.exp()
    }

    pub fn is_possible(&self) -> bool {
        self.per_element_log_prob > f64::NEG_INFINITY
    }

    /// `-(1/n) ln p_n(ω)` for members.
    pub fn spectrum_value(&self, n: u64) -> f64 {
        -self.per_element_log_prob / n as f64
    }
}

/// Exact class-level summary of a product distribution `P^n` (or of any
/// explicit distribution grouped by equal outcome probability).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeClassTable {
    n: u64,
    alphabet_size: usize,
    classes: Vec<TypeClass>,
    #[serde(skip)]
    descending: Vec<usize>,
}

/// `C(n + d - 1, d - 1)` as a float.
pub fn composition_count(n: u64, d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let (n, k) = ((n + d as u64 - 1) as f64, (d - 1) as f64);
    (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0))
        .exp()
        .round()
}

/// Compositions of `n` into `d` non-negative parts, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u32>>,
}

impl Compositions {
    pub fn new(n: u32, d: usize) -> Self {
        let current = (d > 0).then(|| {
            let mut c = vec![0u32; d];
            c[d - 1] = n;
            c
        });
        Compositions { current }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current.clone()?;
        let c = self.current.as_mut().unwrap();
        let d = c.len();
        // rightmost j < d-1 with mass strictly to its right
        let mut suffix = 0u32;
        let mut advanced = false;
        for j in (0..d.saturating_sub(1)).rev() {
            suffix += c[j + 1];
            if suffix > 0 {
                c[j] += 1;
                for x in c[j + 1..].iter_mut() {
                    *x = 0;
                }
                c[d - 1] = suffix - 1;
                advanced = true;
                break;
            }
        }
        if !advanced {
            self.current = None;
        }
        Some(out)
    }
}

pub(crate) fn exact_multinomial(comp: &[u32]) -> Option<u128> {
    let mut total: u128 = 1;
    let mut placed: u128 = 0;
    for &k in comp {
        // total *= C(placed + k, k), built incrementally so every step is exact
        for i in 1..=k as u128 {
            placed += 1;
            total = total.checked_mul(placed)? / i;
        }
    }
    Some(total)
}

/// `(ln |T|, |T|)` for the type class of `comp`; the exact count only when
/// it fits in 128 bits.
pub(crate) fn type_count(lnf: &LnFactorial, n: u64, comp: &[u32]) -> (f64, Option<u128>) {
    let log_count = lnf.get(n) - comp.iter().map(|&k| lnf.get(k as u64)).sum::<f64>();
    // ln(2^128) ≈ 88.72; skip the exact product well clear of overflow
    match (log_count < 88.0)
        .then(|| exact_multinomial(comp))
        .flatten()
    {
        Some(c) => ((c as f64).ln(), Some(c)),
        None => (log_count, None),
    }
}

pub(crate) struct LnFactorial(Vec<f64>);

impl LnFactorial {
    pub(crate) fn new(n: u64) -> Self {
        LnFactorial((0..=n).map(|i| ln_gamma(i as f64 + 1.0)).collect())
    }

    pub(crate) fn get(&self, k: u64) -> f64 {
        self.0[k as usize]
    }
}

/// Symbol log-probabilities grouped by exact value, so that mathematically
/// equal per-element probabilities come out bit-identical.
struct LogProbGroups {
    values: Vec<f64>,
    group_of: Vec<usize>,
}

impl LogProbGroups {
    fn new(log_probs: &[f64]) -> Self {
        let mut values: Vec<f64> = Vec::new();
        let group_of = log_probs
            .iter()
            .map(|&lp| match values.iter().position(|&v| v == lp) {
                Some(g) => g,
                None => {
                    values.push(lp);
                    values.len() - 1
                }
            })
            .collect();
        LogProbGroups { values, group_of }
    }

    fn per_element(&self, comp: &[u32]) -> f64 {
        let mut counts = vec![0u64; self.values.len()];
        for (i, &k) in comp.iter().enumerate() {
            counts[self.group_of[i]] += k as u64;
        }
        let mut acc = 0.0;
        for (v, &k) in self.values.iter().zip(&counts) {
            if k == 0 {
                continue;
            }
            if *v == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc += k as f64 * v;
        }
        acc
    }
}

impl TypeClassTable {
    /// Type-class table of `P^n` with the default composition cap.
    pub fn iid(p: &FiniteDistribution, n: u64) -> Result<Self> {
        Self::iid_with_cap(p, n, DEFAULT_CLASS_CAP)
    }

    pub fn iid_with_cap(p: &FiniteDistribution, n: u64, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange {
                name: "n",
                value: 0.0,
                range: "n >= 1",
            });
        }
        let d = p.len();
        let required = composition_count(n, d);
        if required > cap as f64 || n > u32::MAX as u64 {
            return Err(Error::CapExceeded {
                what: "type-class table",
                required,
                cap: cap as f64,
            });
        }
        let groups = LogProbGroups::new(p.log_probs());
        let lnf = LnFactorial::new(n);
        let classes = Compositions::new(n as u32, d)
            .map(|comp| {
                let (log_count, exact_count) = type_count(&lnf, n, &comp);
                let per_element_log_prob = groups.per_element(&comp);
                TypeClass {
                    composition: comp,
                    log_count,
                    exact_count,
                    per_element_log_prob,
                    class_log_prob: class_log_prob(log_count, per_element_log_prob),
                }
            })
            .collect();
        Ok(Self::from_classes(n, d, classes))
    }

    /// Groups the outcomes of an explicit distribution by exact probability.
    /// `n` is the block length the distribution stands for.
    pub fn from_outcomes(p: &FiniteDistribution, n: u64) -> Self {
        let mut classes: Vec<TypeClass> = Vec::new();
        for &lp in p.log_probs() {
            if let Some(c) = classes.iter_mut().find(|c| c.per_element_log_prob == lp) {
                let cnt = c.exact_count.unwrap() + 1;
                c.exact_count = Some(cnt);
                c.log_count = (cnt as f64).ln();
                c.class_log_prob = class_log_prob(c.log_count, lp);
            } else {
                classes.push(TypeClass {
                    composition: Vec::new(),
                    log_count: 0.0,
                    exact_count: Some(1),
                    per_element_log_prob: lp,
                    class_log_prob: lp,
                });
            }
        }
        Self::from_classes(n, p.len(), classes)
    }

    pub(crate) fn from_classes(n: u64, alphabet_size: usize, classes: Vec<TypeClass>) -> Self {
        let mut descending: Vec<usize> = (0..classes.len()).collect();
        descending.sort_by(|&a, &b| {
            classes[b]
                .per_element_log_prob
                .total_cmp(&classes[a].per_element_log_prob)
                .then(a.cmp(&b))
        });
        TypeClassTable {
            n,
            alphabet_size,
            classes,
            descending,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn classes(&self) -> &[TypeClass] {
        &self.classes
    }

    pub fn class(&self, id: usize) -> &TypeClass {
        &self.classes[id]
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class ids by descending per-element probability; ties keep class order.
    pub fn descending(&self) -> &[usize] {
        &self.descending
    }

    /// Possible classes by descending per-element probability.
    pub fn descending_possible(&self) -> impl Iterator<Item = (usize, &TypeClass)> + '_ {
        self.descending
            .iter()
            .map(move |&i| (i, &self.classes[i]))
            .filter(|(_, c)| c.is_possible())
    }

    /// `ln` of the number of outcomes with positive probability.
    pub fn log_support_size(&self) -> f64 {
        let v: Vec<f64> = self
            .classes
            .iter()
            .filter(|c| c.is_possible())
            .map(|c| c.log_count)
            .collect();
        log_sum_exp(&v)
    }

    /// `ln` of the number of all outcomes, possible or not.
    pub fn log_outcome_count(&self) -> f64 {
        let v: Vec<f64> = self.classes.iter().map(|c| c.log_count).collect();
        log_sum_exp(&v)
    }

    pub fn total_probability(&self) -> f64 {
        crate::logspace::sum(&self.classes.iter().map(|c| c.prob()).collect::<Vec<_>>())
    }

    /// `p_n{ p_n(ω) > e^{-log_threshold} }` computed from the small end.
    pub fn mass_above(&self, log_inv_threshold: f64) -> f64 {
        let mut v: Vec<f64> = self
            .classes
            .iter()
            .filter(|c| c.is_possible() && c.per_element_log_prob > -log_inv_threshold)
            .map(|c| c.prob())
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        crate::logspace::sum(&v)
    }

    /// Outcome-level entropy of the table's distribution.
    pub fn entropy(&self) -> f64 {
        self.classes
            .iter()
            .filter(|c| c.is_possible())
            .map(|c| -c.prob() * c.per_element_log_prob)
            .collect::<crate::logspace::CompensatedSum>()
            .value()
    }
}

fn class_log_prob(log_count: f64, per_element: f64) -> f64 {
    if per_element == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        log_count + per_element
    }
}
