//! The trade-off between decoding error and output uniformity for a shared
//! encoder: the gap `δ(p_n)` to the nearest flat distribution, the check
//! `ε(Φ) + ε(Ψ) >= δ(p_n)`, and a pair that makes it nearly tight.

use serde::Serialize;
use serde_json::{json, Value};

use crate::coding::{BoundCheck, Ranked, ThresholdCode};
use crate::error::{Error, Result};
use crate::logspace::{log_add, CompensatedSum};
use crate::randomness::{
    build_composite, finite_or_null, HasProfile, OutputProfile, VirtualExtractor,
};
use crate::sources::TypeClassTable;

/// Fixed CSV header of trade-off sweeps.
pub const TRADEOFF_CSV_HEADER: &str = "n,a,b,code_error,extractor_distance,sum,delta_pn";

/// `δ(p) = min_S d(p, U_S)` and a minimizing subset size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaGap {
    pub value: f64,
    pub log_m: f64,
    /// The subset size when it is small enough to be exact.
    pub m: Option<u128>,
}

struct Scan {
    /// Per-element log-probabilities, descending.
    lq: Vec<f64>,
    /// `ln` of the number of outcomes in classes `..k`.
    log_before: Vec<f64>,
    exact_before: Vec<Option<u128>>,
    /// Mass of classes `..k` and `k..`.
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

impl Scan {
    fn new(table: &TypeClassTable) -> Self {
        let ranked = Ranked::new(table);
        let k = ranked.order.len();
        let mut lq = Vec::with_capacity(k);
        let mut log_before = vec![f64::NEG_INFINITY; k + 1];
        let mut exact_before = vec![Some(0u128); k + 1];
        let mut prefix = vec![0.0; k + 1];
        let mut acc = CompensatedSum::new();
        for (i, &id) in ranked.order.iter().enumerate() {
            let c = table.class(id);
            lq.push(c.per_element_log_prob);
            log_before[i + 1] = log_add(log_before[i], c.log_count);
            exact_before[i + 1] = exact_before[i]
                .zip(c.exact_count)
                .and_then(|(x, y)| x.checked_add(y));
            acc.add(c.prob());
            prefix[i + 1] = acc.value();
        }
        for i in 0..=k {
            if let Some(e) = exact_before[i] {
                log_before[i] = if e == 0 {
                    f64::NEG_INFINITY
                } else {
                    (e as f64).ln()
                };
            }
        }
        Scan {
            lq,
            log_before,
            exact_before,
            prefix,
            suffix: ranked.suffix,
        }
    }

    fn log_support(&self) -> f64 {
        self.log_before[self.lq.len()]
    }

    /// `d(p, U_S)` for `S` the `e^{log_m}` most probable outcomes:
    /// `1 − p(S) + Σ_ω (p(ω) − 1/m)^+`.
    fn value(&self, log_m: f64) -> f64 {
        let k = self.lq.len();
        // segment: classes ..seg are fully inside, class seg partially
        let seg = self.log_before[1..=k]
            .partition_point(|&c| c < log_m)
            .min(k - 1);
        let remaining = gap_log(self.log_before[seg + 1], log_m);
        let outside = self.suffix[seg + 1] + (remaining + self.lq[seg]).exp();
        let r = self.lq.partition_point(|&q| q >= -log_m);
        let excess = self.prefix[r] - (self.log_before[r] - log_m).exp();
        outside + excess.max(0.0)
    }

    fn candidates(&self) -> Vec<(f64, Option<u128>)> {
        let k = self.lq.len();
        let support = self.exact_before[k];
        let log_support = self.log_support();
        let mut out: Vec<(f64, Option<u128>)> = vec![(0.0, Some(1))];
        let push_int = |m: u128, out: &mut Vec<(f64, Option<u128>)>| {
            if m >= 1 && support.is_none_or(|s| m <= s) {
                out.push(((m as f64).ln(), Some(m)));
            }
        };
        for i in 1..=k {
            match self.exact_before[i] {
                Some(e) => push_int(e, &mut out),
                None => out.push((self.log_before[i], None)),
            }
        }
        for &q in &self.lq {
            let log_m = -q;
            if log_m < 0.0 || log_m > log_support {
                continue;
            }
            if log_m < 52.0 * std::f64::consts::LN_2 {
                let m = log_m.exp();
                push_int(m.floor() as u128, &mut out);
                push_int(m.ceil() as u128, &mut out);
            } else {
                out.push((log_m, None));
            }
        }
        out
    }
}

/// `ln(e^a − e^b)` clamped to `-inf` when `b >= a`.
fn gap_log(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        a
    } else if a <= b {
        f64::NEG_INFINITY
    } else {
        a + (-(b - a).exp()).ln_1p()
    }
}

/// Exact `δ(p_n)` at class granularity.
///
/// For fixed `m` the best `S` is the `m` most probable outcomes, and between
/// class boundaries and the points `m = 1/p` the objective is concave in `m`,
/// so only those points are scanned.
pub fn delta_uniform_gap(table: &TypeClassTable) -> DeltaGap {
    let scan = Scan::new(table);
    if scan.lq.is_empty() {
        return DeltaGap {
            value: 0.0,
            log_m: 0.0,
            m: Some(1),
        };
    }
    let mut best = DeltaGap {
        value: f64::INFINITY,
        log_m: 0.0,
        m: None,
    };
    for (log_m, m) in scan.candidates() {
        let v = scan.value(log_m);
        if v < best.value {
            best = DeltaGap { value: v, log_m, m };
        }
    }
    best.value = best.value.clamp(0.0, 1.0);
    best
}

/// What an encoder does with each class: map it one-to-one onto its own
/// bins, or pour it greedily (in descending probability) into a shared block
/// of `e^{spread_log_m}` bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encoder {
    pub n: u64,
    /// `(class, ln of the number of members kept injectively)`.
    pub injective: Vec<(usize, f64)>,
    pub spread: Vec<usize>,
    pub spread_log_m: f64,
}

impl Encoder {
    /// A threshold code keeps its retained outcomes injectively and sends
    /// everything else to one shared bin.
    pub fn of_code(code: &ThresholdCode, table: &TypeClassTable) -> Self {
        let full: Vec<usize> = code
            .retained
            .iter()
            .filter(|r| !r.partial)
            .map(|r| r.class)
            .collect();
        let spread = table
            .descending_possible()
            .map(|(i, _)| i)
            .filter(|i| !full.contains(i))
            .collect();
        Encoder {
            n: code.n,
            injective: code
                .retained
                .iter()
                .map(|r| (r.class, r.log_kept))
                .collect(),
            spread,
            spread_log_m: 0.0,
        }
    }

    /// A greedy extractor over the whole table.
    pub fn of_extractor(table: &TypeClassTable, log_m: f64) -> Self {
        Encoder {
            n: table.n(),
            injective: Vec::new(),
            spread: table.descending_possible().map(|(i, _)| i).collect(),
            spread_log_m: log_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffCheck {
    pub code_error: f64,
    pub extractor_distance: f64,
    pub sum: f64,
    pub delta: f64,
    pub holds: bool,
    /// `sum − δ`.
    pub slack: f64,
}

impl TradeoffCheck {
    fn new(code_error: f64, extractor_distance: f64, delta: f64) -> Self {
        let sum = code_error + extractor_distance;
        TradeoffCheck {
            code_error,
            extractor_distance,
            sum,
            delta,
            holds: sum >= delta - 1e-12,
            slack: sum - delta,
        }
    }
}

/// Checks `ε(Φ) + ε(Ψ) >= δ(p_n)` for a code and an extractor; the two must
/// use the same encoder.
pub fn verify_tradeoff(
    code: (&Encoder, f64),
    extractor: (&Encoder, f64),
    table: &TypeClassTable,
) -> Result<TradeoffCheck> {
    if code.0 != extractor.0 {
        return Err(Error::EncoderMismatch);
    }
    Ok(TradeoffCheck::new(
        code.1,
        extractor.1,
        delta_uniform_gap(table).value,
    ))
}

/// A code and an extractor sharing one encoder: injective on
/// `S_n(a,b) = {−ln p_n(ω) < na + √n b}`, greedy on the complement over
/// `M̂ = floor((1 − ε_n) e^{na + √n(b + γ_n)})` further bins, `γ_n = n^{-1/4}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPair {
    pub n: u64,
    pub a: f64,
    pub b: f64,
    pub gamma_n: f64,
    /// `p_n(S_n(a,b))`.
    pub eps_n: f64,
    pub injective: ThresholdCode,
    pub spread: Option<VirtualExtractor>,
    pub spread_classes: Vec<usize>,
    /// `ln(M̃ + M̂)`.
    pub log_size: f64,
    /// Law of the shared encoder's output: the extractor view.
    pub output: OutputProfile,
    /// Error of the decoder that inverts the injective part and maps each
    /// spread bin to its most probable preimage.
    pub code_error: f64,
    /// Error when spread bins are not decoded at all: `1 − ε_n`.
    pub inverse_only_error: f64,
    pub extractor_distance: f64,
    /// Achievability bound for the spread part under the renormalized
    /// complement law, with `M̂' = (1 − ε_n) e^{na + √n(b + 2γ_n)}`.
    pub spread_achievability: Option<BoundCheck>,
    /// `(1 − ε_n) e^{−√n γ_n} + p_n{−ln p_n(ω) < na + √n(b + 2γ_n)}`.
    pub proof_bound: f64,
}

impl HasProfile for JointPair {
    fn profile(&self) -> &OutputProfile {
        &self.output
    }
}

pub fn gamma_n(n: u64) -> f64 {
    (n as f64).powf(-0.25)
}

pub fn build_joint_pair(table: &TypeClassTable, a: f64, b: f64) -> JointPair {
    let n = table.n();
    let nf = n as f64;
    let rn = nf.sqrt();
    let gamma = gamma_n(n);
    let cut = nf * a + rn * b;
    let c = build_composite(table, -cut, cut + rn * gamma);
    let rest = c.injective.error;
    let log_prime = cut + 2.0 * rn * gamma;

    let spread_achievability = c.spread.as_ref().map(|s| {
        let lhs = s.profile().normalized().distance();
        let heavy = CompensatedSum::from_iter(
            c.spread_classes
                .iter()
                .map(|&id| table.class(id))
                .filter(|cl| cl.per_element_log_prob > -log_prime)
                .map(|cl| cl.prob()),
        )
        .value();
        let rhs = heavy / rest + (s.log_m - rest.ln() - log_prime).exp();
        BoundCheck {
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-12,
        }
    });
    let proof_bound = rest * (-rn * gamma).exp() + table.mass_above(log_prime);

    JointPair {
        n,
        a,
        b,
        gamma_n: gamma,
        eps_n: c.retained_mass,
        code_error: c.map_error(),
        inverse_only_error: rest,
        extractor_distance: c.output.distance(),
        injective: c.injective,
        spread: c.spread,
        spread_classes: c.spread_classes,
        log_size: c.log_size,
        output: c.output,
        spread_achievability,
        proof_bound,
    }
}

impl JointPair {
    pub fn encoder(&self) -> Encoder {
        Encoder {
            n: self.n,
            injective: self
                .injective
                .retained
                .iter()
                .map(|r| (r.class, r.log_kept))
                .collect(),
            spread: self.spread_classes.clone(),
            spread_log_m: self.spread.as_ref().map_or(0.0, |s| s.log_m),
        }
    }

    pub fn verify(&self, table: &TypeClassTable) -> TradeoffCheck {
        TradeoffCheck::new(
            self.code_error,
            self.extractor_distance,
            delta_uniform_gap(table).value,
        )
    }

    pub fn csv_row(&self, check: &TradeoffCheck) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.a,
            self.b,
            check.code_error,
            check.extractor_distance,
            check.sum,
            check.delta
        )
    }

    pub fn summary(&self, check: &TradeoffCheck) -> Value {
        json!({
            "n": self.n,
            "a": self.a,
            "b": self.b,
            "gamma_n": self.gamma_n,
            "eps_n": self.eps_n,
            "log_size": finite_or_null(self.log_size),
            "retained_classes": self.injective.retained.len(),
            "spread_classes": self.spread_classes.len(),
            "spread_log_size": self.spread.as_ref().map(|s| s.log_m),
            "code_error": check.code_error,
            "inverse_only_error": self.inverse_only_error,
            "extractor_distance": check.extractor_distance,
            "sum": check.sum,
            "delta_pn": check.delta,
            "holds": check.holds,
            "slack": check.slack,
            "proof_bound": self.proof_bound,
            "spread_achievability": self.spread_achievability,
        })
    }
}
