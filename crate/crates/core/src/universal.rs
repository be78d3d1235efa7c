//! Universal constructions by the method of types. The code keeps every type
//! class with `|T| <= e^{na + b√n}` and never looks at the source; the
//! extractor sends those classes to one bin and spreads each remaining class
//! over `e^{na + b√n} / n` bins.

use serde::Serialize;
use serde_json::{json, Value};

use crate::coding::second_order_coefficient;
use crate::dist::FiniteDistribution;
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, CompensatedSum};
use crate::randomness::finite_or_null;
use crate::sources::{
    composition_count, type_count, Compositions, LnFactorial, TypeClassTable, DEFAULT_CLASS_CAP,
};

const INCLUSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniversalTypeCode {
    pub n: u64,
    pub d: usize,
    pub a: f64,
    pub b: f64,
    pub included_types: Vec<Vec<u32>>,
    /// `ln Σ |T|` over the included types.
    pub log_total_size: f64,
    /// Inclusion flag per composition, in enumeration order.
    #[serde(skip)]
    mask: Vec<bool>,
}

fn threshold(n: u64, a: f64, b: f64) -> f64 {
    n as f64 * a + (n as f64).sqrt() * b
}

fn check_shape(n: u64, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 2",
        });
    }
    if n == 0 || n > u32::MAX as u64 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            range: "1 <= n < 2^32",
        });
    }
    let required = composition_count(n, d);
    if required > DEFAULT_CLASS_CAP as f64 {
        return Err(Error::CapExceeded {
            what: "type enumeration",
            required,
            cap: DEFAULT_CLASS_CAP as f64,
        });
    }
    Ok(())
}

/// `ln |T|` for every composition of `n` into `d` parts.
fn type_log_counts(n: u64, d: usize) -> impl Iterator<Item = (Vec<u32>, f64, Option<u128>)> {
    let lnf = LnFactorial::new(n);
    Compositions::new(n as u32, d).map(move |comp| {
        let (log_count, exact) = type_count(&lnf, n, &comp);
        (comp, log_count, exact)
    })
}

pub fn universal_type_code(n: u64, d: usize, a: f64, b: f64) -> Result<UniversalTypeCode> {
    check_shape(n, d)?;
    let limit = threshold(n, a, b) + INCLUSION_TOL;
    let mut included_types = Vec::new();
    let mut mask = Vec::new();
    let mut logs = Vec::new();
    let mut exact_total: Option<u128> = Some(0);
    for (comp, log_count, exact) in type_log_counts(n, d) {
        let keep = log_count <= limit;
        mask.push(keep);
        if keep {
            logs.push(log_count);
            exact_total = exact_total.zip(exact).and_then(|(x, y)| x.checked_add(y));
            included_types.push(comp);
        }
    }
    let log_total_size = match exact_total {
        Some(0) => f64::NEG_INFINITY,
        Some(t) => (t as f64).ln(),
        None => log_sum_exp(&logs),
    };
    Ok(UniversalTypeCode {
        n,
        d,
        a,
        b,
        included_types,
        log_total_size,
        mask,
    })
}

fn eval_table(n: u64, d: usize, p: &FiniteDistribution) -> Result<TypeClassTable> {
    if p.len() != d {
        return Err(Error::Shape(format!(
            "evaluation source has {} symbols, code is over {d}",
            p.len()
        )));
    }
    TypeClassTable::iid(p, n)
}

impl UniversalTypeCode {
    /// `(ln Σ|T| − na)/√n`.
    pub fn second_order(&self) -> f64 {
        second_order_coefficient(self.log_total_size, self.n, self.a)
    }

    /// `P^n(T_n(a,b))`, summed over the inside and outside separately.
    fn split_mass(&self, p: &FiniteDistribution) -> Result<(f64, f64)> {
        let table = eval_table(self.n, self.d, p)?;
        let mut inside = CompensatedSum::new();
        let mut outside = CompensatedSum::new();
        for (c, &keep) in table.classes().iter().zip(&self.mask) {
            if keep {
                inside.add(c.prob());
            } else {
                outside.add(c.prob());
            }
        }
        Ok((inside.value(), outside.value()))
    }

    pub fn report(&self, evals: &[(String, FiniteDistribution)]) -> Result<Value> {
        let mut errors = Vec::new();
        for (label, p) in evals {
            let bound = self.extractor_bound(p)?;
            errors.push(json!({
                "P": label,
                "error": universal_code_error(self, p)?,
                "extractor_bound": bound.bound,
                "extractor_per_type_bound": bound.per_type_bound,
            }));
        }
        Ok(json!({
            "n": self.n,
            "d": self.d,
            "a_nats": self.a,
            "b": self.b,
            "included_types": self.included_types.len(),
            "log_size_nats": finite_or_null(self.log_total_size),
            "second_order_b": finite_or_null(self.second_order()),
            "errors": errors,
        }))
    }
}

/// `1 − P^n(T_n(a,b))`.
pub fn universal_code_error(code: &UniversalTypeCode, p: &FiniteDistribution) -> Result<f64> {
    Ok(code.split_mass(p)?.1.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniversalExtractorBound {
    /// `P^n(T^c)/n + P^n(T)`.
    pub bound: f64,
    /// `Σ_{T' ⊄ T} P^n(T') M/|T'| + P^n(T)`, the sharper first step.
    pub per_type_bound: f64,
    /// `ln M = na + b√n − ln n`.
    pub log_m: f64,
    pub inside_mass: f64,
}

/// Upper bound on the distance of the universal extractor to uniform. The
/// exact distance would need the `e^{na}` bins materialized.
pub fn universal_extractor_distance(
    n: u64,
    d: usize,
    a: f64,
    b: f64,
    p: &FiniteDistribution,
) -> Result<UniversalExtractorBound> {
    universal_type_code(n, d, a, b)?.extractor_bound(p)
}

impl UniversalTypeCode {
    /// The extractor bound for the extractor built on these same types.
    pub fn extractor_bound(&self, p: &FiniteDistribution) -> Result<UniversalExtractorBound> {
        let table = eval_table(self.n, self.d, p)?;
        let log_m = threshold(self.n, self.a, self.b) - (self.n as f64).ln();
        let mut inside = CompensatedSum::new();
        let mut outside = CompensatedSum::new();
        let mut spread = CompensatedSum::new();
        for (c, &keep) in table.classes().iter().zip(&self.mask) {
            if keep {
                inside.add(c.prob());
            } else {
                outside.add(c.prob());
                spread.add((c.class_log_prob + log_m - c.log_count).exp());
            }
        }
        let inside = inside.value();
        Ok(UniversalExtractorBound {
            bound: (outside.value() / self.n as f64 + inside).min(1.0),
            per_type_bound: (spread.value() + inside).min(1.0),
            log_m,
            inside_mass: inside,
        })
    }
}
