use std::fs;

use crate::dist::{entropy, varentropy, FiniteDistribution};
use crate::error::{Error, Result};
use crate::sources::{
    markov_entropy_rate, markov_psi, markov_varentropy, ExplicitSource, MarkovSource,
    TypeClassTable,
};

/// A source named on the command line.
///
/// `bernoulli:p`, `uniform:d`, `dist:p1,p2,..` (or `label:p` pairs),
/// `dist-file:PATH` (JSON), `markov:ROWS` with rows of `Q` separated by `;`,
/// `markov-file:PATH` (JSON list of columns), `explicit:PATH` (JSON map from
/// block length to distribution).
pub type Psi<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

#[derive(Debug, Clone)]
pub enum SourceSpec {
    Iid(FiniteDistribution),
    Markov(MarkovSource),
    Explicit(ExplicitSource),
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{path}: {e}")))
}

impl SourceSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("source `{spec}`: expected KIND:ARGS")))?;
        let arg = arg.trim().trim_matches('"');
        Ok(match kind.trim() {
            "bernoulli" => SourceSpec::Iid(FiniteDistribution::bernoulli(
                crate::dist::parse_probability(arg)?,
            )?),
            "uniform" => {
                let d: usize = arg
                    .parse()
                    .map_err(|_| Error::Parse(format!("uniform: bad alphabet size `{arg}`")))?;
                SourceSpec::Iid(FiniteDistribution::uniform(d)?)
            }
            "dist" => SourceSpec::Iid(FiniteDistribution::parse_text(arg)?),
            "dist-file" => SourceSpec::Iid(FiniteDistribution::parse_json(&read(arg)?)?),
            "markov" => SourceSpec::Markov(MarkovSource::parse_text(arg)?),
            "markov-file" => SourceSpec::Markov(MarkovSource::parse_json(&read(arg)?)?),
            "explicit" => SourceSpec::Explicit(ExplicitSource::parse_json(&read(arg)?)?),
            other => return Err(Error::Parse(format!("unknown source kind `{other}`"))),
        })
    }

    /// Exact `p_n` as a type-class table; `None` for Markov sources.
    pub fn table(&self, n: u64) -> Result<Option<TypeClassTable>> {
        match self {
            SourceSpec::Iid(p) => TypeClassTable::iid(p, n).map(Some),
            SourceSpec::Markov(_) => Ok(None),
            SourceSpec::Explicit(e) => e
                .table(n)
                .map(Some)
                .ok_or_else(|| Error::Parse(format!("explicit source has no block length {n}"))),
        }
    }

    /// Entropy rate; for explicit sources `H(p_n)/n`.
    pub fn entropy_rate(&self, n: u64) -> Result<f64> {
        match self {
            SourceSpec::Iid(p) => Ok(entropy(p)),
            SourceSpec::Markov(m) => markov_entropy_rate(m),
            SourceSpec::Explicit(e) => Ok(entropy(self.explicit(e, n)?) / n as f64),
        }
    }

    /// Varentropy rate; for explicit sources `Var(−ln p_n)/n`.
    pub fn varentropy_rate(&self, n: u64) -> Result<f64> {
        match self {
            SourceSpec::Iid(p) => Ok(varentropy(p)),
            SourceSpec::Markov(m) => markov_varentropy(m),
            SourceSpec::Explicit(e) => Ok(varentropy(self.explicit(e, n)?) / n as f64),
        }
    }

    /// `ψ(s)` per symbol and its `s → 0` limit; i.i.d. and Markov only.
    pub fn psi(&self) -> Option<(Psi<'_>, f64)> {
        match self {
            SourceSpec::Iid(p) => Some((
                Box::new(move |s| crate::dist::renyi_psi(p, s).unwrap_or(f64::NAN)),
                (p.support_size() as f64).ln(),
            )),
            SourceSpec::Markov(m) => {
                let at_zero = markov_psi(m, f64::MIN_POSITIVE).ok()?;
                Some((
                    Box::new(move |s| markov_psi(m, s).unwrap_or(f64::NAN)),
                    at_zero,
                ))
            }
            SourceSpec::Explicit(_) => None,
        }
    }

    fn explicit<'a>(&self, e: &'a ExplicitSource, n: u64) -> Result<&'a FiniteDistribution> {
        e.get(n)
            .ok_or_else(|| Error::Parse(format!("explicit source has no block length {n}")))
    }
}

/// `H`, `H+x`, `H-x` (relative to the source's entropy rate) or a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSpec {
    Value(f64),
    Entropy(f64),
}

impl RateSpec {
    pub fn resolve(self, entropy_rate: f64) -> f64 {
        match self {
            RateSpec::Value(v) => v,
            RateSpec::Entropy(off) => entropy_rate + off,
        }
    }
}

impl std::str::FromStr for RateSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let bad = || format!("bad rate `{s}`: expected a number, `H`, `H+x` or `H-x`");
        if let Some(rest) = s.strip_prefix('H') {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(RateSpec::Entropy(0.0));
            }
            let (sign, num) = match rest.split_at(1) {
                ("+", num) => (1.0, num),
                ("-", num) => (-1.0, num),
                _ => return Err(bad()),
            };
            let v: f64 = num.trim().parse().map_err(|_| bad())?;
            return Ok(RateSpec::Entropy(sign * v));
        }
        s.parse().map(RateSpec::Value).map_err(|_| bad())
    }
}

impl<'de> serde::Deserialize<'de> for RateSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(RateSpec::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
