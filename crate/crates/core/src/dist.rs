//! Finite distributions and the exact information quantities built on them.
//!
//! Everything is in nats. `0 · ln 0` is taken as `0` throughout and a zero
//! probability carries `-inf` as its log.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, CompensatedSum};
use crate::sources::TypeClassTable;

/// Tolerance on `Σ p = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Probability mass function over a labeled finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
    #[serde(skip)]
    log_probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        if labels.len() != probs.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        for (label, &p) in labels.iter().zip(&probs) {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidProbability {
                    label: label.clone(),
                    value: p,
                });
            }
        }
        let mut seen = HashMap::with_capacity(labels.len());
        for l in &labels {
            if seen.insert(l.as_str(), ()).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let total = crate::logspace::sum(&probs);
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                sum: total,
                tol: NORMALIZATION_TOL,
            });
        }
        let log_probs = probs
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
            .collect();
        Ok(FiniteDistribution {
            labels,
            probs,
            log_probs,
        })
    }

    /// Distribution with labels `0..d-1`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(labels, probs)
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Empty);
        }
        Self::from_probs(vec![1.0 / d as f64; d])
    }

    /// `P(1) = p`, `P(0) = 1 - p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                name: "p",
                value: p,
                range: "[0, 1]",
            });
        }
        Self::new(vec!["0".into(), "1".into()], vec![1.0 - p, p])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn prob_of(&self, label: &str) -> f64 {
        self.labels
            .iter()
            .position(|l| l == label)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Parse `label:prob,label:prob,...`; probabilities may be decimals or
    /// `num/den` fractions. A bare list `0.5,0.25,0.25` gets labels `0..`.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        for (i, item) in text.split(',').enumerate() {
            let item = item.trim();
            if item.is_empty() {
                return Err(Error::Parse(format!("empty entry at position {i}")));
            }
            let (label, value) = match item.rsplit_once(':') {
                Some((l, v)) => (l.trim().to_string(), v),
                None => (i.to_string(), item),
            };
            labels.push(label);
            probs.push(parse_probability(value)?);
        }
        Self::new(labels, probs)
    }

    /// Parse a JSON array: `[0.5, "1/4", ...]`, `[["a", 0.5], ...]` or
    /// `[{"label": "a", "prob": 0.5}, ...]`.
    pub fn parse_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Num {
            F(f64),
            S(String),
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Entry {
            label: String,
            prob: Num,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Item {
            Bare(Num),
            Pair(String, Num),
            Object(Entry),
        }
        let to_f64 = |n: Num| match n {
            Num::F(x) => Ok(x),
            Num::S(s) => parse_probability(&s),
        };
        let items: Vec<Item> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut labels = Vec::with_capacity(items.len());
        let mut probs = Vec::with_capacity(items.len());
        for (i, item) in items.into_iter().enumerate() {
            let (l, p) = match item {
                Item::Bare(n) => (i.to_string(), to_f64(n)?),
                Item::Pair(l, n) => (l, to_f64(n)?),
                Item::Object(e) => (e.label, to_f64(e.prob)?),
            };
            labels.push(l);
            probs.push(p);
        }
        Self::new(labels, probs)
    }
}

/// Decimal or `num/den`. Fractions are divided in `f64` (one rounding).
pub fn parse_probability(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a probability: `{text}`"));
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        Ok(num as f64 / den as f64)
    } else {
        text.parse::<f64>().map_err(|_| bad())
    }
}

/// Shannon entropy `H(P)`.
pub fn entropy(p: &FiniteDistribution) -> f64 {
    entropy_of(p.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .collect::<CompensatedSum>()
        .value()
        .max(0.0)
}

/// Varentropy `V_P = Var[-ln P(X)]`.
pub fn varentropy(p: &FiniteDistribution) -> f64 {
    varentropy_of(p.probs())
}

pub(crate) fn varentropy_of(probs: &[f64]) -> f64 {
    let h = entropy_of(probs);
    probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let d = -x.ln() - h;
            x * d * d
        })
        .collect::<CompensatedSum>()
        .value()
        .max(0.0)
}

/// `ψ(s) = ln Σ P(ω)^s` for `s ∈ (0, 1]`.
pub fn renyi_psi(p: &FiniteDistribution, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            range: "(0, 1]",
        });
    }
    Ok(psi_of(p.log_probs(), s))
}

pub(crate) fn psi_of(log_probs: &[f64], s: f64) -> f64 {
    let terms: Vec<f64> = log_probs
        .iter()
        .filter(|l| l.is_finite())
        .map(|l| s * l)
        .collect();
    log_sum_exp(&terms)
}

fn aligned(p: &FiniteDistribution, q: &FiniteDistribution) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = p
        .labels
        .iter()
        .zip(&p.probs)
        .map(|(l, &pp)| (pp, q.prob_of(l)))
        .collect();
    for (l, &qq) in q.labels.iter().zip(&q.probs) {
        if !p.labels.contains(l) {
            out.push((0.0, qq));
        }
    }
    out
}

/// Half the L1 distance, over the union of both label sets.
pub fn variational_distance(p: &FiniteDistribution, q: &FiniteDistribution) -> f64 {
    let s: CompensatedSum = aligned(p, q)
        .into_iter()
        .map(|(a, b)| (a - b).abs())
        .collect();
    (0.5 * s.value()).min(1.0)
}

/// `D(p‖q)`; `+inf` when `p` has mass outside the support of `q`.
pub fn kl_divergence(p: &FiniteDistribution, q: &FiniteDistribution) -> f64 {
    let mut s = CompensatedSum::new();
    for (a, b) in aligned(p, q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        s.add(a * (a.ln() - b.ln()));
    }
    s.value().max(0.0)
}

/// `H(M, p_n) = -Σ_{p(ω) > 1/M} p(ω) ln p(ω)`, strict threshold.
pub fn truncated_entropy(table: &TypeClassTable, log_m: f64) -> f64 {
    let mut s = CompensatedSum::new();
    for class in table.classes() {
        let lp = class.per_element_log_prob;
        if lp.is_finite() && lp > -log_m {
            s.add(-class.prob() * lp);
        }
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> FiniteDistribution {
        FiniteDistribution::from_probs(v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&d(&[0.5, 0.5])) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&d(&[1.0, 0.0])), 0.0);
        let b = FiniteDistribution::bernoulli(0.11).unwrap();
        assert!((entropy(&b) - 0.346515).abs() < 1e-6);
    }

    #[test]
    fn varentropy_examples() {
        assert!(varentropy(&FiniteDistribution::uniform(7).unwrap()) < 1e-15);
        assert!(varentropy(&d(&[0.5, 0.5])) < 1e-15);
        let b = FiniteDistribution::bernoulli(0.11).unwrap();
        assert!((varentropy(&b) - 0.427940).abs() < 1e-6);
    }

    #[test]
    fn psi_examples() {
        let b = FiniteDistribution::bernoulli(0.11).unwrap();
        assert!(renyi_psi(&b, 1.0).unwrap().abs() < 1e-15);
        let u = d(&[0.5, 0.5]);
        assert!((renyi_psi(&u, 0.5).unwrap() - 0.346574).abs() < 1e-6);
        // ln(√0.11 + √0.89)
        assert!((renyi_psi(&b, 0.5).unwrap() - 0.242994).abs() < 1e-6);
        assert!(renyi_psi(&b, 0.0).is_err());
        assert!(renyi_psi(&b, 1.5).is_err());
    }

    #[test]
    fn distance_examples() {
        let p = d(&[0.5, 0.25, 0.25]);
        assert_eq!(variational_distance(&p, &p), 0.0);
        let a = FiniteDistribution::new(vec!["a".into()], vec![1.0]).unwrap();
        let b = FiniteDistribution::new(vec!["b".into()], vec![1.0]).unwrap();
        assert_eq!(variational_distance(&a, &b), 1.0);
        let u = FiniteDistribution::uniform(3).unwrap();
        assert!((variational_distance(&p, &u) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = d(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p), 0.0);
        assert!((kl_divergence(&d(&[0.5, 0.5]), &d(&[0.9, 0.1])) - 0.510826).abs() < 1e-6);
        assert!((kl_divergence(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(
            kl_divergence(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])),
            f64::INFINITY
        );
    }

    #[test]
    fn truncated_entropy_examples() {
        let t = TypeClassTable::iid(&d(&[0.5, 0.25, 0.25]), 1).unwrap();
        assert_eq!(truncated_entropy(&t, 2f64.ln()), 0.0);
        assert!((truncated_entropy(&t, 4f64.ln()) - 0.346574).abs() < 1e-6);
        assert!((truncated_entropy(&t, 100f64.ln()) - 1.039721).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            FiniteDistribution::from_probs(vec![0.5, 0.4]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(FiniteDistribution::from_probs(vec![1.5, -0.5]).is_err());
        assert!(matches!(
            FiniteDistribution::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]),
            Err(Error::DuplicateLabel(_))
        ));
        assert_eq!(d(&[1.0, 0.0]).log_probs()[1], f64::NEG_INFINITY);
    }

    #[test]
    fn parsing() {
        let p = FiniteDistribution::parse_text("a:1/2, b:0.25,c:1/4").unwrap();
        assert_eq!(p.labels(), &["a", "b", "c"]);
        assert_eq!(p.probs(), &[0.5, 0.25, 0.25]);
        let q = FiniteDistribution::parse_json(r#"[["x", "1/3"], ["y", "2/3"]]"#).unwrap();
        assert!((q.prob_of("y") - 2.0 / 3.0).abs() < 1e-16);
        let r = FiniteDistribution::parse_json(
            r#"[{"label":"h","prob":0.5},{"label":"t","prob":0.5}]"#,
        )
        .unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(
            FiniteDistribution::parse_json("[0.25, 0.75]")
                .unwrap()
                .labels()[1],
            "1"
        );
        assert!(FiniteDistribution::parse_text("a:1/0").is_err());
        assert!(FiniteDistribution::parse_text("a:0.5,").is_err());
    }

    fn random_dist() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 2..=10).prop_filter_map("non-zero", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-3).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn entropy_bounds(v in random_dist()) {
            let p = d(&v);
            let h = entropy(&p);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
            prop_assert!(varentropy(&p) >= 0.0);
        }

        #[test]
        fn pinsker(v in random_dist(), w in random_dist()) {
            let n = v.len().min(w.len());
            let renorm = |x: &[f64]| { let s: f64 = x[..n].iter().sum(); x[..n].iter().map(|y| y / s).collect::<Vec<_>>() };
            let (p, q) = (d(&renorm(&v)), d(&renorm(&w)));
            let dist = variational_distance(&p, &q);
            prop_assert!(2.0 * dist * dist <= kl_divergence(&p, &q) + 1e-12);
            prop_assert!((dist - variational_distance(&q, &p)).abs() < 1e-15);
        }

        #[test]
        fn psi_convex(v in random_dist()) {
            let p = d(&v);
            let grid: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
            let vals: Vec<f64> = grid.iter().map(|&s| renyi_psi(&p, s).unwrap()).collect();
            for w in vals.windows(3) {
                prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            }
            for &x in &vals[..63] {
                prop_assert!(x >= -1e-12);
            }
        }
    }
}
