//! Group-level simulation of the greedy extractor.
//!
//! Items arrive in descending probability and each goes to a currently
//! least-loaded bin. Bins with equal load stay interchangeable, so the state
//! is a short list of `(bin count, level)` groups with `level = load · M`.
//! A class of equal items is water-filled in one step: the `c` items occupy
//! the `c` smallest pre-levels `level + j·ω`, which is exactly what placing
//! them one at a time does to the multiset of loads.
//!
//! When `M` exceeds `2^53`, bins are counted in units of `S = M / 2^50` bins.
//! The remainder bookkeeping is then exact up to `S` bins, which moves the
//! distance by at most `2^-50`. Classes too large to count exactly in `f64`
//! (more than `2^52` units) or too light to resolve against the current level
//! are poured as fluid; each bin is then off by less than one item, so levels
//! move by less than `ω`. Fluid pouring keeps the
//! distance exact while all levels stay at or below 1, but it can fill bins
//! that would stay empty, so `D(U ‖ q)` is approximate in that regime.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::LN_2;

use crate::coding::size_from_log;
use crate::logspace::CompensatedSum;

use super::profile::BinGroup;

const FLUID_UNITS: f64 = 4_503_599_627_370_496.0; // 2^52
/// Items lighter than this fraction of the water level cannot be counted
/// per bin in `f64` and are poured as fluid.
const RESOLVE_REL: f64 = 1e-13;
const MERGE_REL: f64 = 1e-12;

/// A run of equiprobable items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ItemClass {
    pub log_count: f64,
    pub exact_count: Option<u128>,
    pub log_weight: f64,
}

pub(crate) struct Spread {
    pub groups: Vec<BinGroup>,
    /// Mass of the items that landed in an empty bin: the mass a per-bin
    /// MAP decoder recovers.
    pub first_item_mass: f64,
}

#[derive(Clone, Copy)]
struct Group {
    units: f64,
    level: f64,
}

struct Level(f64, usize);

impl PartialEq for Level {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Level {}
impl PartialOrd for Level {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Level {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

/// `(number of groups below the level, level)` for pouring `mass` units.
fn water_level(groups: &[Group], mass: f64) -> (usize, f64) {
    let mut u = 0.0;
    let mut l = CompensatedSum::new();
    for j in 0..groups.len() {
        u += groups[j].units;
        l.add(groups[j].units * groups[j].level);
        let theta = (mass + l.value()) / u;
        if j + 1 == groups.len() || theta <= groups[j + 1].level {
            return (j + 1, theta);
        }
    }
    (0, 0.0)
}

fn normalize(groups: &mut Vec<Group>) {
    groups.retain(|g| g.units > 0.0);
    groups.sort_by(|a, b| a.level.total_cmp(&b.level));
    let mut out: Vec<Group> = Vec::with_capacity(groups.len());
    for g in groups.drain(..) {
        match out.last_mut() {
            Some(last)
                if last.level > 0.0
                    && (g.level - last.level).abs() <= MERGE_REL * g.level.max(last.level) =>
            {
                let u = last.units + g.units;
                last.level = (last.units * last.level + g.units * g.level) / u;
                last.units = u;
            }
            _ => out.push(g),
        }
    }
    *groups = out;
}

/// Spreads `items` (descending weight) over `e^{log_m}` bins.
pub(crate) fn spread(items: &[ItemClass], log_m: f64) -> Spread {
    let (log_s, m_units) = if log_m <= 53.0 * LN_2 {
        (0.0, size_from_log(log_m).unwrap_or(1).max(1) as f64)
    } else {
        (log_m - 50.0 * LN_2, 2f64.powi(50))
    };
    let log_m = if log_s == 0.0 { m_units.ln() } else { log_m };
    let mut groups = vec![Group {
        units: m_units,
        level: 0.0,
    }];
    let mut heavy: Vec<BinGroup> = Vec::new();
    let mut first = CompensatedSum::new();

    for it in items {
        if it.log_weight == f64::NEG_INFINITY || it.log_count == f64::NEG_INFINITY {
            continue;
        }
        let log_omega = it.log_weight + log_m;
        let c_u = match (log_s == 0.0, it.exact_count) {
            (true, Some(c)) => c as f64,
            _ => (it.log_count - log_s).exp(),
        };
        let mass_u = (it.log_count + it.log_weight).exp() * m_units;
        let unit_weight = (log_s + it.log_weight).exp();

        if log_omega > 0.0 {
            // heavy: each item alone in an empty bin
            heavy.push(BinGroup::from_logs(c_u.ln() - m_units.ln(), log_omega));
            if groups[0].level == 0.0 {
                groups[0].units = (groups[0].units - c_u).max(0.0);
            }
            first.add((it.log_count + it.log_weight).exp());
            normalize(&mut groups);
            continue;
        }
        if groups.is_empty() || mass_u == 0.0 || log_omega == f64::NEG_INFINITY {
            continue;
        }
        let omega = log_omega.exp();
        let (j, theta) = water_level(&groups, mass_u);
        let discrete = if c_u > FLUID_UNITS || omega < RESOLVE_REL * theta {
            None
        } else {
            place_discrete(&groups, j, theta, omega, c_u)
        };
        match discrete {
            Some((next, recv)) => {
                first.add(recv * unit_weight);
                groups = next;
            }
            None => {
                if groups[0].level == 0.0 {
                    first.add(groups[0].units.min(c_u) * unit_weight);
                }
                let units: f64 = groups[..j].iter().map(|g| g.units).sum();
                groups.splice(
                    ..j,
                    [Group {
                        units,
                        level: theta,
                    }],
                );
            }
        }
        normalize(&mut groups);
    }

    let groups = heavy
        .into_iter()
        .filter(|g| g.frac > 0.0 || g.mass > 0.0)
        .chain(
            groups
                .into_iter()
                .filter(|g| g.units > 0.0)
                .map(|g| BinGroup::new(g.units / m_units, g.level)),
        )
        .collect();
    Spread {
        groups,
        first_item_mass: first.value(),
    }
}

/// Places `c_u` items of weight `ω` on the `c_u` smallest pre-levels.
/// Returns the new groups and the number of empty bins that received an
/// item, or `None` when rounding leaves the remainder unresolvable.
fn place_discrete(
    groups: &[Group],
    j: usize,
    theta: f64,
    omega: f64,
    c_u: f64,
) -> Option<(Vec<Group>, f64)> {
    let gcount = groups.len();
    let mut k = vec![0.0f64; gcount];
    let mut extra = vec![0.0f64; gcount];
    for g in 0..j {
        k[g] = ((theta - groups[g].level) / omega).floor().max(0.0);
    }
    let mut placed = CompensatedSum::new();
    for g in 0..gcount {
        placed.add(groups[g].units * k[g]);
    }
    let mut r = c_u - placed.value();
    let tol = 1e-9 + c_u * 1e-14;
    let budget = 4 * gcount + 16;
    let mut steps = 0;
    // rounding can overshoot by one item per bin
    while r < -tol {
        steps += 1;
        if steps > budget {
            return None;
        }
        let g = (0..gcount).filter(|&g| k[g] >= 1.0).max_by(|&a, &b| {
            let la = groups[a].level + (k[a] - 1.0) * omega;
            let lb = groups[b].level + (k[b] - 1.0) * omega;
            la.total_cmp(&lb)
        })?;
        k[g] -= 1.0;
        if groups[g].units <= -r + tol {
            r += groups[g].units;
        } else {
            extra[g] = groups[g].units + r;
            r = 0.0;
        }
    }
    if r > tol {
        let mut heap: BinaryHeap<Reverse<Level>> = (0..gcount)
            .map(|g| Reverse(Level(groups[g].level + k[g] * omega, g)))
            .collect();
        while r > tol {
            steps += 1;
            if steps > budget {
                return None;
            }
            let Reverse(Level(_, g)) = heap.pop()?;
            let avail = groups[g].units - extra[g];
            if avail <= r + tol {
                k[g] += 1.0;
                extra[g] = 0.0;
                r -= avail;
                heap.push(Reverse(Level(groups[g].level + k[g] * omega, g)));
            } else {
                extra[g] += r;
                r = 0.0;
            }
        }
    }
    let recv = if groups[0].level == 0.0 {
        if k[0] >= 1.0 {
            groups[0].units
        } else {
            extra[0]
        }
    } else {
        0.0
    };
    let mut next = Vec::with_capacity(gcount + 1);
    for g in 0..gcount {
        let base = groups[g].level + k[g] * omega;
        if extra[g] > 0.0 {
            next.push(Group {
                units: extra[g],
                level: base + omega,
            });
        }
        next.push(Group {
            units: groups[g].units - extra[g],
            level: base,
        });
    }
    Some((next, recv))
}
