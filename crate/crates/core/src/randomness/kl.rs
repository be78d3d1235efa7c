//! KL-divergence criteria: the lower-bound integrals, the `S*` family and the
//! construction that attains the first-order bound.

use crate::coding::{BoundCheck, ThresholdCode};
use crate::dist::{psi_of, FiniteDistribution};
use crate::error::{Error, Result};

use crate::optimize::golden_section;
use crate::sources::TypeClassTable;
use crate::spectrum::{std_normal_cdf, std_normal_pdf, std_normal_quantile, SpectrumCDF};

use super::composite::build_composite;
use super::profile::OutputProfile;
use super::VirtualExtractor;

/// Limit law of the (first- or second-order) normalized log-likelihood.
#[derive(Debug, Clone, Copy)]
pub enum LimitLaw<'a> {
    Spectrum(&'a SpectrumCDF),
    /// Centered normal with the given variance.
    Gaussian(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

/// `∫_{x <= a} (a − x) F(dx)` with atoms at `a` included.
///
/// For a spectrum law the same sum serves both orders: the caller passes the
/// first-order spectrum with `a`, or a second-order law with `b`. The
/// Gaussian law is second-order only: `b Φ(b/√V) + √V φ(b/√V)`.
pub fn kl_rate_lower_bound(limit: LimitLaw<'_>, a: f64, order: Order) -> Result<f64> {
    match limit {
        LimitLaw::Spectrum(f) => Ok(f.lower_partial_moment(a)),
        LimitLaw::Gaussian(v) => {
            if order == Order::First {
                return Err(Error::Shape(
                    "a Gaussian limit law only enters the second-order bound".into(),
                ));
            }
            if !(v >= 0.0) {
                return Err(Error::NegativeVariance(v));
            }
            if v == 0.0 {
                return Ok(a.max(0.0));
            }
            let sd = v.sqrt();
            let z = a / sd;
            Ok((sd * (z * std_normal_cdf(z) + std_normal_pdf(z))).max(0.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SStar {
    pub s_star: f64,
    pub s_star_1: f64,
    pub s_star_2: f64,
    /// Interior minimizer of the `S*₂` objective; `None` when the infimum is
    /// the `s → 0` limit.
    pub minimizer: Option<f64>,
}

fn s_grid() -> Vec<f64> {
    let half = 128;
    let (lo, hi) = (1e-9f64.ln(), 0.5f64.ln());
    let left: Vec<f64> = (0..half)
        .map(|i| (lo + (hi - lo) * i as f64 / (half - 1) as f64).exp())
        .collect();
    let mut grid = left.clone();
    grid.extend(left.iter().rev().skip(1).map(|x| 1.0 - x));
    grid.push(1.0 - 1e-9);
    grid
}

/// `min_{0 < s < 1} (sδ + ψ(s)) / (1 − s)`, where `limit_at_zero = ψ(0+)`.
pub fn s_star_two<F: Fn(f64) -> f64>(psi: F, delta: f64, limit_at_zero: f64) -> (f64, Option<f64>) {
    let f = |s: f64| (s * delta + psi(s)) / (1.0 - s);
    let grid = s_grid();
    let vals: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
    let i = (0..grid.len())
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (s, v) = golden_section(f, lo, hi, 1e-10);
    let (s, v) = if v <= vals[i] {
        (s, v)
    } else {
        (grid[i], vals[i])
    };
    if limit_at_zero <= v {
        (limit_at_zero, None)
    } else {
        (v, Some(s))
    }
}

/// `S* = H + δ`, `S*₁ = H`, and `S*₂` for an i.i.d. source.
pub fn s_star_family(p: &FiniteDistribution, delta: f64) -> Result<SStar> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, inf)",
        });
    }
    let h = crate::dist::entropy(p);
    let lp = p.log_probs();
    let (s2, minimizer) = s_star_two(|s| psi_of(lp, s), delta, (p.support_size() as f64).ln());
    Ok(SStar {
        s_star: h + delta,
        s_star_1: h,
        s_star_2: s2,
        minimizer,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SStarSecondOrder {
    pub s_star_2nd: f64,
    pub s_star_1_2nd: f64,
}

/// Second-order `S*`: solves `E[(b − X)₊] = δ` for `X ~ N(0, V)` by
/// bisection, and `S*₁ = √V Φ⁻¹(1 − e^{−δ})`.
pub fn s_star_second_order(v: f64, delta: f64) -> Result<SStarSecondOrder> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::OutOfRange {
            name: "V",
            value: v,
            range: "(0, inf)",
        });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, inf)",
        });
    }
    let g = |b: f64| kl_rate_lower_bound(LimitLaw::Gaussian(v), b, Order::Second).unwrap();
    let mut lo = -1.0;
    while g(lo) > delta {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while g(hi) < delta {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    let s1 = v.sqrt() * std_normal_quantile(-(-delta).exp_m1())?;
    Ok(SStarSecondOrder {
        s_star_2nd: b,
        s_star_1_2nd: s1,
    })
}

/// `D <= ln M (M'/M + 1/M' + p{p > 1/M})` with `M' = √M`.
pub fn spread_kl_check(kl: f64, log_m: f64, heavy_mass: f64) -> BoundCheck {
    let rhs = log_m * (2.0 * (-0.5 * log_m).exp() + heavy_mass);
    BoundCheck {
        lhs: kl,
        rhs,
        holds: kl <= rhs + 1e-12,
    }
}

/// Injective map on `S_n(a) = {−(1/n) ln p_n < a}` plus a greedy spread of
/// the complement over `M̂ = max(1, floor((1 − ε_n) e^{na}))` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct KlOptimalCode {
    pub injective: ThresholdCode,
    pub spread: Option<VirtualExtractor>,
    pub spread_classes: Vec<usize>,
    /// `p_n(S_n(a))`.
    pub eps_n: f64,
    /// Decoding error with the injective part inverted and every spread bin
    /// decoded to its most probable preimage.
    pub code_error: f64,
    /// `ln(M̃ + M̂)`.
    pub log_size: f64,
    pub output: OutputProfile,
    /// `D(p_n ∘ φ⁻¹ ‖ U)`.
    pub kl: f64,
    pub kl_per_n: f64,
}

pub fn build_kl_optimal_code(table: &TypeClassTable, a: f64) -> KlOptimalCode {
    let n = table.n() as f64;
    let c = build_composite(table, -n * a, n * a);
    let kl = c.output.kl_to_uniform();
    KlOptimalCode {
        code_error: c.map_error(),
        eps_n: c.retained_mass,
        injective: c.injective,
        spread: c.spread,
        spread_classes: c.spread_classes,
        log_size: c.log_size,
        output: c.output,
        kl,
        kl_per_n: kl / n,
    }
}

use super::HasProfile;

impl KlOptimalCode {
    /// The lemma bound for the spread part, applied to the complement law
    /// renormalized to one.
    pub fn spread_bound(&self, table: &TypeClassTable) -> Option<BoundCheck> {
        let s = self.spread.as_ref()?;
        let rest = self.injective.error;
        let heavy: f64 = self
            .spread_classes
            .iter()
            .map(|&id| table.class(id))
            .filter(|c| c.per_element_log_prob - rest.ln() > -s.log_m)
            .map(|c| c.prob() / rest)
            .sum();
        let kl = s.profile().normalized().kl_to_uniform();
        Some(spread_kl_check(kl, s.log_m, heavy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_examples() {
        let h = 0.346515;
        let pm = SpectrumCDF::point_mass(h);
        let f = |a| kl_rate_lower_bound(LimitLaw::Spectrum(&pm), a, Order::First).unwrap();
        assert!((f(0.5) - (0.5 - h)).abs() < 1e-15);
        assert_eq!(f(0.2), 0.0);
        assert_eq!(f(h), 0.0);
        let g = |b| kl_rate_lower_bound(LimitLaw::Gaussian(1.0), b, Order::Second).unwrap();
        assert!((g(0.0) - 0.398942).abs() < 1e-6);
        assert!(g(-10.0) <= 1e-20);
        assert!(kl_rate_lower_bound(LimitLaw::Gaussian(1.0), 0.0, Order::First).is_err());
    }

    #[test]
    fn s_star_examples() {
        let u = FiniteDistribution::uniform(4).unwrap();
        for d in [0.01, 0.1, 1.0] {
            let r = s_star_family(&u, d).unwrap();
            assert!((r.s_star_2 - 4f64.ln()).abs() < 1e-12);
            assert_eq!(r.minimizer, None);
        }
        let b = FiniteDistribution::bernoulli(0.11).unwrap();
        let r = s_star_family(&b, 0.1).unwrap();
        assert!((r.s_star - 0.446515).abs() < 1e-6 && (r.s_star_1 - 0.346515).abs() < 1e-6);
        assert!((r.s_star_2 - 0.5852).abs() < 1e-3);
        assert!((r.minimizer.unwrap() - 0.47).abs() < 0.01);
        assert!(s_star_family(&b, 0.0).is_err());
    }

    #[test]
    fn second_order_examples() {
        let r = s_star_second_order(1.0, std_normal_pdf(0.0)).unwrap();
        assert!(r.s_star_2nd.abs() < 1e-8);
        let r = s_star_second_order(2.0, 2f64.ln()).unwrap();
        assert!(r.s_star_1_2nd.abs() < 1e-12);
        assert!(s_star_second_order(1.0, 1e-6).unwrap().s_star_2nd < -3.0);
        assert!(s_star_second_order(0.0, 0.1).is_err());
    }

    #[test]
    fn kl_code_small() {
        let t = TypeClassTable::iid(&FiniteDistribution::bernoulli(0.11).unwrap(), 2).unwrap();
        let c = build_kl_optimal_code(&t, 1.0);
        assert_eq!(c.injective.retained.len(), 1);
        assert!((c.eps_n - 0.7921).abs() < 1e-12);
        assert!((c.output.mass() - 1.0).abs() < 1e-12);
        let c = build_kl_optimal_code(&t, 0.05);
        assert_eq!(c.eps_n, 0.0);
        assert!(c.injective.retained.is_empty());
        assert!(c.spread.is_some());
    }
}
