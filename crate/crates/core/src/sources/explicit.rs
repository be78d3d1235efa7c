use std::collections::BTreeMap;

use crate::dist::FiniteDistribution;
use crate::error::{Error, Result};

use super::TypeClassTable;

/// A general source given directly as one distribution per block length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExplicitSource {
    per_n: BTreeMap<u64, FiniteDistribution>,
}

impl ExplicitSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: u64, p: FiniteDistribution) {
        self.per_n.insert(n, p);
    }

    pub fn get(&self, n: u64) -> Option<&FiniteDistribution> {
        self.per_n.get(&n)
    }

    pub fn block_lengths(&self) -> impl Iterator<Item = u64> + '_ {
        self.per_n.keys().copied()
    }

    pub fn table(&self, n: u64) -> Option<TypeClassTable> {
        self.per_n
            .get(&n)
            .map(|p| TypeClassTable::from_outcomes(p, n))
    }

    /// `{"<n>": <distribution JSON>, ...}`; each value uses the formats of
    /// [`FiniteDistribution::parse_json`].
    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut src = ExplicitSource::new();
        for (k, v) in raw {
            let n: u64 = k
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Parse(format!("block length key `{k}`")))?;
            src.insert(n, FiniteDistribution::parse_json(&v.to_string())?);
        }
        if src.per_n.is_empty() {
            return Err(Error::Empty);
        }
        Ok(src)
    }
}
