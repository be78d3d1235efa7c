use serde::Serialize;
use serde_json::{json, Value};

use crate::logspace::CompensatedSum;

/// `frac` of the output bins carry load `level / M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinGroup {
    pub frac: f64,
    pub level: f64,
    /// `frac · level`, kept separately so it stays finite when `frac`
    /// underflows and `level` overflows.
    pub mass: f64,
    pub log_level: f64,
}

impl BinGroup {
    pub fn new(frac: f64, level: f64) -> Self {
        BinGroup {
            frac,
            level,
            mass: frac * level,
            log_level: level.ln(),
        }
    }

    pub fn from_logs(log_frac: f64, log_level: f64) -> Self {
        BinGroup {
            frac: log_frac.exp(),
            level: log_level.exp(),
            mass: (log_frac + log_level).exp(),
            log_level,
        }
    }
}

/// Multiset of output-bin loads, grouped. Levels are loads times the number
/// of bins, so the uniform distribution is every level at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputProfile {
    pub n: u64,
    pub log_m: f64,
    pub groups: Vec<BinGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlDirection {
    /// `D(q ‖ U_M)`.
    ToUniform,
    /// `D(U_M ‖ q)`.
    FromUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    One,
    InvSqrtN,
    InvN,
}

impl Normalization {
    pub fn scale(self, n: u64) -> f64 {
        match self {
            Normalization::One => 1.0,
            Normalization::InvSqrtN => 1.0 / (n as f64).sqrt(),
            Normalization::InvN => 1.0 / n as f64,
        }
    }
}

impl OutputProfile {
    /// Groups explicit bin loads by exact value.
    pub fn from_loads(n: u64, loads: &[f64]) -> Self {
        let m = loads.len() as f64;
        let mut sorted = loads.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut groups: Vec<BinGroup> = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            groups.push(BinGroup::new((j - i) as f64 / m, sorted[i] * m));
            i = j;
        }
        OutputProfile {
            n,
            log_m: m.ln(),
            groups,
        }
    }

    /// Total load (1 for a full distribution).
    pub fn mass(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.mass)
            .collect::<CompensatedSum>()
            .value()
    }

    /// `½ Σ |q_i − 1/M|`.
    pub fn distance(&self) -> f64 {
        0.5 * self
            .groups
            .iter()
            .map(|g| (g.mass - g.frac).abs())
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn kl_to_uniform(&self) -> f64 {
        self.groups
            .iter()
            .filter(|g| g.mass > 0.0)
            .map(|g| g.mass * g.log_level)
            .collect::<CompensatedSum>()
            .value()
            .max(0.0)
    }

    pub fn kl_from_uniform(&self) -> f64 {
        if self.groups.iter().any(|g| g.frac > 0.0 && g.level == 0.0) {
            return f64::INFINITY;
        }
        self.groups
            .iter()
            .filter(|g| g.frac > 0.0)
            .map(|g| -g.frac * g.log_level)
            .collect::<CompensatedSum>()
            .value()
            .max(0.0)
    }

    pub fn kl(&self, direction: KlDirection, norm: Normalization) -> f64 {
        let d = match direction {
            KlDirection::ToUniform => self.kl_to_uniform(),
            KlDirection::FromUniform => self.kl_from_uniform(),
        };
        d * norm.scale(self.n)
    }

    /// `H(q) = ln M − D(q ‖ U_M)`.
    pub fn entropy(&self) -> f64 {
        self.log_m - self.kl_to_uniform()
    }

    /// Rescales levels so the loads sum to one.
    pub fn normalized(&self) -> Self {
        let mass = self.mass();
        OutputProfile {
            n: self.n,
            log_m: self.log_m,
            groups: self
                .groups
                .iter()
                .map(|g| BinGroup {
                    frac: g.frac,
                    level: g.level / mass,
                    mass: g.mass / mass,
                    log_level: g.log_level - mass.ln(),
                })
                .collect(),
        }
    }

    /// Re-expresses these bins as part of a larger output of `e^{log_total}` bins.
    pub(crate) fn embed(&self, log_total: f64) -> Vec<BinGroup> {
        let shift = log_total - self.log_m;
        self.groups
            .iter()
            .map(|g| BinGroup {
                frac: g.frac * (-shift).exp(),
                level: (g.log_level + shift).exp(),
                mass: g.mass,
                log_level: g.log_level + shift,
            })
            .collect()
    }

    /// Load histogram: exact groups when few, otherwise `buckets` equal-width
    /// buckets over the level range.
    pub fn histogram(&self, buckets: usize) -> Value {
        if self.groups.len() <= buckets {
            let rows: Vec<Value> = self
                .groups
                .iter()
                .map(|g| json!({"level": g.level, "frac": g.frac}))
                .collect();
            return Value::Array(rows);
        }
        let lo = self
            .groups
            .iter()
            .map(|g| g.level)
            .fold(f64::INFINITY, f64::min);
        let hi = self.groups.iter().map(|g| g.level).fold(0.0, f64::max);
        let width = ((hi - lo) / buckets as f64).max(f64::MIN_POSITIVE);
        let mut fr = vec![0.0; buckets];
        for g in &self.groups {
            let b = (((g.level - lo) / width) as usize).min(buckets - 1);
            fr[b] += g.frac;
        }
        let rows: Vec<Value> = fr
            .iter()
            .enumerate()
            .filter(|(_, f)| **f > 0.0)
            .map(|(b, f)| {
                json!({
                    "level_lo": lo + b as f64 * width,
                    "level_hi": lo + (b + 1) as f64 * width,
                    "frac": f,
                })
            })
            .collect();
        Value::Array(rows)
    }
}
