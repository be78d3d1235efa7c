//! Log-domain weights and compensated summation.
//!
//! Magnitudes such as `e^{-n H}` underflow `f64` long before the block
//! lengths this crate works with, so probabilities and counts are carried as
//! natural logarithms. Zero is represented by `-inf`.

use std::cmp::Ordering;
use std::ops::{Add, Mul};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().value()
}

/// A non-negative magnitude stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogWeight(ln)
    }

    pub fn from_linear(x: f64) -> Self {
        debug_assert!(x >= 0.0);
        LogWeight(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn linear(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `self - other` in the linear domain; `None` if the result would be negative.
    pub fn checked_sub(self, other: LogWeight) -> Option<LogWeight> {
        if other.is_zero() {
            return Some(self);
        }
        match self.0.partial_cmp(&other.0) {
            Some(Ordering::Less) => None,
            Some(Ordering::Equal) => Some(LogWeight::ZERO),
            _ => Some(LogWeight(self.0 + (-(other.0 - self.0).exp()).ln_1p())),
        }
    }
}

impl Add for LogWeight {
    type Output = LogWeight;

    fn add(self, rhs: LogWeight) -> LogWeight {
        LogWeight(log_add(self.0, rhs.0))
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;

    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            return LogWeight::ZERO;
        }
        LogWeight(self.0 + rhs.0)
    }
}

impl PartialOrd for LogWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

/// `ln(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when equal.
pub fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    debug_assert!(a >= b, "log_sub({a}, {b})");
    if a <= b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// `ln Σ e^{v_i}`, summed from the smallest term upwards with compensation.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values
        .iter()
        .copied()
        .filter(|x| *x != f64::NEG_INFINITY)
        .collect();
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let max = *v.last().unwrap();
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: CompensatedSum = v.iter().map(|x| (x - max).exp()).collect();
    max + s.value().ln()
}
