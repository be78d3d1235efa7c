//! Codes that are injective on a high-probability set and spread the
//! remaining outcomes greedily over extra bins.

use crate::coding::{floor_log, Ranked, Retained, ThresholdCode};
use crate::logspace::{log_add, CompensatedSum};
use crate::sources::TypeClassTable;

use super::profile::{BinGroup, OutputProfile};
use super::{virtual_over, HasProfile, VirtualExtractor};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Composite {
    /// The injective part; its `error` is the mass outside the retained set.
    pub injective: ThresholdCode,
    pub spread: Option<VirtualExtractor>,
    pub spread_classes: Vec<usize>,
    /// Mass of the retained set.
    pub retained_mass: f64,
    /// `ln(M̃ + M̂)`.
    pub log_size: f64,
    pub output: OutputProfile,
}

impl Composite {
    /// Mass lost with the injective part inverted and each spread bin decoded
    /// to its most probable preimage.
    pub fn map_error(&self) -> f64 {
        let recovered = self.spread.as_ref().map_or(0.0, |s| s.first_item_mass);
        (self.injective.error - recovered).max(0.0)
    }
}

/// Retains every class with `ln p(ω) > log_cut` injectively and spreads the
/// rest over `floor(rest · e^{log_scale})` bins (at least one).
pub(crate) fn build_composite(table: &TypeClassTable, log_cut: f64, log_scale: f64) -> Composite {
    let n = table.n();
    let ranked = Ranked::new(table);
    let k = ranked
        .order
        .iter()
        .take_while(|&&id| table.class(id).per_element_log_prob > log_cut)
        .count();
    let (inside, outside) = ranked.order.split_at(k);
    let rest = ranked.suffix[k];
    let retained_mass =
        CompensatedSum::from_iter(inside.iter().map(|&id| table.class(id).prob())).value();

    let mut log_tilde = f64::NEG_INFINITY;
    let mut exact_tilde: Option<u128> = Some(0);
    let retained: Vec<Retained> = inside
        .iter()
        .map(|&id| {
            let c = table.class(id);
            log_tilde = log_add(log_tilde, c.log_count);
            exact_tilde = exact_tilde
                .zip(c.exact_count)
                .and_then(|(x, y)| x.checked_add(y));
            Retained {
                class: id,
                log_kept: c.log_count,
                kept_exact: c.exact_count,
                partial: false,
            }
        })
        .collect();
    if let Some(e) = exact_tilde {
        log_tilde = if e == 0 {
            f64::NEG_INFINITY
        } else {
            (e as f64).ln()
        };
    }
    let injective = ThresholdCode {
        n,
        log_size: log_tilde.max(0.0),
        retained,
        exact_size: exact_tilde.and_then(|e| u64::try_from(e).ok()),
        error: rest,
    };

    let spread = (rest > 0.0 && !outside.is_empty()).then(|| {
        let log_hat = floor_log((rest.ln() + log_scale).max(0.0));
        virtual_over(table, outside, log_hat)
    });
    let log_size = match &spread {
        Some(s) => log_add(log_tilde, s.log_m),
        None => log_tilde.max(0.0),
    };
    let mut groups: Vec<BinGroup> = inside
        .iter()
        .map(|&id| {
            let c = table.class(id);
            BinGroup::from_logs(c.log_count - log_size, c.per_element_log_prob + log_size)
        })
        .collect();
    if let Some(s) = &spread {
        groups.extend(s.profile().embed(log_size));
    }
    Composite {
        injective,
        spread,
        spread_classes: outside.to_vec(),
        retained_mass,
        log_size,
        output: OutputProfile {
            n,
            log_m: log_size,
            groups,
        },
    }
}
