//! Fixed-length threshold codes over type-class tables.

use serde::Serialize;
use serde_json::{json, Value};

use crate::logspace::{log_add, log_sub, CompensatedSum};
use crate::sources::TypeClassTable;

/// Largest `ln M` handled with exact integer bookkeeping.
const EXACT_LOG_LIMIT: f64 = 120.0 * std::f64::consts::LN_2;

/// Retained share of one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Retained {
    pub class: usize,
    /// `ln` of the number of retained members.
    pub log_kept: f64,
    pub kept_exact: Option<u128>,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCode {
    pub n: u64,
    /// `ln M` of the codebook actually used.
    pub log_size: f64,
    pub retained: Vec<Retained>,
    pub exact_size: Option<u64>,
    pub error: f64,
}

/// Both sides of a lemma inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Possible classes by descending probability, with `suffix[k]` = mass of
/// order positions `k..`, accumulated from the least probable class.
pub(crate) struct Ranked {
    pub order: Vec<usize>,
    pub suffix: Vec<f64>,
}

impl Ranked {
    pub fn new(table: &TypeClassTable) -> Self {
        let order: Vec<usize> = table.descending_possible().map(|(i, _)| i).collect();
        let mut suffix = vec![0.0; order.len() + 1];
        let mut acc = CompensatedSum::new();
        for k in (0..order.len()).rev() {
            acc.add(table.class(order[k]).prob());
            suffix[k] = acc.value();
        }
        Ranked { order, suffix }
    }
}

/// `floor(e^{log_m})` as an integer, snapping values within `1e-12` relative
/// of an integer (so `ln 3` yields 3).
pub fn size_from_log(log_m: f64) -> Option<u128> {
    if !(log_m >= 0.0) || log_m > EXACT_LOG_LIMIT {
        return None;
    }
    let m = log_m.exp();
    let r = m.round();
    if (m - r).abs() <= 1e-12 * r.max(1.0) {
        Some(r as u128)
    } else {
        Some(m.floor() as u128)
    }
}

/// `ln floor(e^{log_m})`, with the same snapping as [`size_from_log`].
pub fn floor_log(log_m: f64) -> f64 {
    match size_from_log(log_m) {
        Some(m) => (m as f64).ln(),
        None => log_m,
    }
}

/// Keeps the `floor(e^{log_m})` most probable outcomes.
pub fn build_threshold_code(table: &TypeClassTable, log_m: f64) -> ThresholdCode {
    let ranked = Ranked::new(table);
    let log_m = log_m.max(0.0);
    let m_exact = size_from_log(log_m);
    let log_m = floor_log(log_m);
    let mut retained = Vec::new();
    // outcomes still to place, exact while every count so far is exact
    let mut rem_exact = m_exact;
    let mut log_rem = log_m;
    let mut error = 0.0;
    let mut used_log = f64::NEG_INFINITY;
    let mut used_exact: Option<u128> = Some(0);
    let mut finished = false;
    for (k, &id) in ranked.order.iter().enumerate() {
        let c = table.class(id);
        let fits = match (rem_exact, c.exact_count) {
            (Some(r), Some(cnt)) => cnt <= r,
            _ => c.log_count <= log_rem,
        };
        if fits {
            retained.push(Retained {
                class: id,
                log_kept: c.log_count,
                kept_exact: c.exact_count,
                partial: false,
            });
            used_log = log_add(used_log, c.log_count);
            used_exact = used_exact.zip(c.exact_count).map(|(a, b)| a + b);
            rem_exact = rem_exact.zip(c.exact_count).map(|(r, cnt)| r - cnt);
            log_rem = match rem_exact {
                Some(r) => (r as f64).ln(),
                None => log_sub(log_m, used_log),
            };
            continue;
        }
        // partial class, then stop
        let (kept_exact, log_kept) = match rem_exact {
            Some(r) => (Some(r), (r as f64).ln()),
            None => (None, log_rem),
        };
        let missing = match (c.exact_count, kept_exact) {
            (Some(cnt), Some(kept)) => ((cnt - kept) as f64).ln(),
            _ => log_sub(c.log_count, log_kept),
        };
        error = ranked.suffix[k + 1] + (missing + c.per_element_log_prob).exp();
        if log_kept > f64::NEG_INFINITY {
            retained.push(Retained {
                class: id,
                log_kept,
                kept_exact,
                partial: true,
            });
            used_log = log_add(used_log, log_kept);
            used_exact = used_exact.zip(kept_exact).map(|(a, b)| a + b);
        }
        finished = true;
        break;
    }
    if !finished {
        error = 0.0;
    }
    // a codebook larger than the support is trimmed to the support
    let (log_size, size) = if finished {
        (log_m, m_exact)
    } else {
        (used_log.max(0.0), used_exact)
    };
    ThresholdCode {
        n: table.n(),
        log_size,
        retained,
        exact_size: size.and_then(|m| u64::try_from(m).ok()),
        error,
    }
}

/// `ln` of the smallest `M` whose threshold code has error `<= eps`.
pub fn min_log_size_for_error(table: &TypeClassTable, eps: f64) -> f64 {
    let ranked = Ranked::new(table);
    let mut used_log = f64::NEG_INFINITY;
    let mut used_exact: Option<u128> = Some(0);
    for (k, &id) in ranked.order.iter().enumerate() {
        let c = table.class(id);
        let after = ranked.suffix[k + 1];
        if after <= eps {
            // drop as many members of this class as the budget allows
            let allowed = ((eps - after) / c.element_prob()).floor();
            let (log_kept, kept_exact) = match c.exact_count {
                Some(cnt) => {
                    let drop = if allowed >= cnt as f64 {
                        cnt
                    } else {
                        allowed as u128
                    };
                    let kept = cnt - drop;
                    ((kept as f64).ln(), Some(kept))
                }
                None => {
                    let log_drop = allowed.ln();
                    if log_drop >= c.log_count {
                        (f64::NEG_INFINITY, Some(0))
                    } else {
                        (log_sub(c.log_count, log_drop), None)
                    }
                }
            };
            let total_exact = used_exact.zip(kept_exact).map(|(a, b)| a + b);
            return match total_exact {
                Some(t) => (t.max(1) as f64).ln(),
                None => log_add(used_log, log_kept).max(0.0),
            };
        }
        used_log = log_add(used_log, c.log_count);
        used_exact = used_exact.zip(c.exact_count).map(|(a, b)| a + b);
    }
    match used_exact {
        Some(t) => (t.max(1) as f64).ln(),
        None => used_log.max(0.0),
    }
}

/// Checks `1 - error <= p_n{p_n > 1/M'} + M/M'`.
pub fn converse_check_code(
    table: &TypeClassTable,
    log_m: f64,
    error: f64,
    log_m_prime: f64,
) -> BoundCheck {
    let lhs = 1.0 - error;
    let rhs = table.mass_above(log_m_prime) + (log_m - log_m_prime).exp();
    BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    }
}

/// `(ln M - n a) / √n`.
pub fn second_order_coefficient(log_m: f64, n: u64, a: f64) -> f64 {
    (log_m - n as f64 * a) / (n as f64).sqrt()
}

impl ThresholdCode {
    pub fn summary(&self, table: &TypeClassTable) -> Value {
        let classes: Vec<Value> = self
            .retained
            .iter()
            .map(|r| {
                json!({
                    "composition": table.class(r.class).composition,
                    "kept": r.kept_exact.map(|k| k.to_string()),
                    "log_kept": r.log_kept,
                    "partial": r.partial,
                })
            })
            .collect();
        json!({
            "n": self.n,
            "logM_nats": self.log_size,
            "error": self.error,
            "retained_classes": classes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::FiniteDistribution;

    fn table(n: u64) -> TypeClassTable {
        TypeClassTable::iid(&FiniteDistribution::bernoulli(0.11).unwrap(), n).unwrap()
    }

    #[test]
    fn small_codes() {
        let t = table(2);
        let c1 = build_threshold_code(&t, 0.0);
        assert!((c1.error - 0.2079).abs() < 1e-12);
        assert_eq!(c1.exact_size, Some(1));
        let c3 = build_threshold_code(&t, 3f64.ln());
        assert!((c3.error - 0.0121).abs() < 1e-12);
        assert_eq!(c3.retained.len(), 2);
        assert!(!c3.retained[1].partial);
        assert_eq!(build_threshold_code(&t, 4f64.ln()).error, 0.0);
        assert_eq!(build_threshold_code(&t, 50.0).error, 0.0);
        let c2 = build_threshold_code(&t, 2f64.ln());
        assert!(c2.retained[1].partial && c2.retained[1].kept_exact == Some(1));
        assert!((c2.error - (0.0979 + 0.0121)).abs() < 1e-12);
    }

    #[test]
    fn inverse_problem() {
        let t = table(2);
        assert_eq!(min_log_size_for_error(&t, 0.21), 0.0);
        assert!((min_log_size_for_error(&t, 0.0) - 4f64.ln()).abs() < 1e-15);
        assert!((min_log_size_for_error(&t, 0.01) - 4f64.ln()).abs() < 1e-15);
        assert!((min_log_size_for_error(&t, 0.0122) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn converse_examples() {
        let t = table(2);
        let r = converse_check_code(&t, 0.0, 0.2079, 2f64.ln());
        assert!((r.lhs - 0.7921).abs() < 1e-12 && (r.rhs - 1.2921).abs() < 1e-12 && r.holds);
        let r = converse_check_code(&t, 3f64.ln(), 0.0121, 0.0);
        assert!((r.rhs - 3.0).abs() < 1e-12 && r.holds);
        assert!(converse_check_code(&t, 3f64.ln(), 0.0121, 300.0).holds);
    }

    #[test]
    fn coefficient() {
        assert_eq!(second_order_coefficient(20.0, 100, 0.2), 0.0);
        assert!((second_order_coefficient(30.0, 100, 0.2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn summary_shape() {
        let t = table(2);
        let s = build_threshold_code(&t, 2f64.ln()).summary(&t);
        assert_eq!(s["retained_classes"].as_array().unwrap().len(), 2);
        assert_eq!(s["retained_classes"][1]["kept"], "1");
    }
}
