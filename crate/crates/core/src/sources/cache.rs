//! Versioned binary cache for type-class tables.
//!
//! Layout (little endian): magic `SOCTTBL\0`, `u16` version, 32-byte key,
//! `u64 n`, `u32 d`, `u64` class count, then per class a `u32` composition
//! length, the composition, three `f64`s (log count, per-element log prob,
//! class log prob), a `u8` exact-count flag and a `u128` count.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::types::{TypeClass, TypeClassTable};
use crate::dist::FiniteDistribution;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SOCTTBL\0";
pub const CACHE_VERSION: u16 = 1;

/// Hex sha256 of `(n, d, prob bits)`.
pub fn table_key(p: &FiniteDistribution, n: u64) -> String {
    let mut h = Sha256::new();
    h.update(n.to_le_bytes());
    h.update((p.len() as u64).to_le_bytes());
    for &x in p.probs() {
        h.update(x.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn key_bytes(key: &str) -> Vec<u8> {
    (0..key.len() / 2)
        .map(|i| u8::from_str_radix(&key[2 * i..2 * i + 2], 16).unwrap_or(0))
        .collect()
}

fn encode(table: &TypeClassTable, key: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + table.len() * 48);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&key_bytes(key));
    out.extend_from_slice(&table.n().to_le_bytes());
    out.extend_from_slice(&(table.alphabet_size() as u32).to_le_bytes());
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    for c in table.classes() {
        out.extend_from_slice(&(c.composition.len() as u32).to_le_bytes());
        for &k in &c.composition {
            out.extend_from_slice(&k.to_le_bytes());
        }
        out.extend_from_slice(&c.log_count.to_le_bytes());
        out.extend_from_slice(&c.per_element_log_prob.to_le_bytes());
        out.extend_from_slice(&c.class_log_prob.to_le_bytes());
        out.push(u8::from(c.exact_count.is_some()));
        out.extend_from_slice(&c.exact_count.unwrap_or(0).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos + k;
        if end > self.buf.len() {
            return Err(Error::Cache("truncated cache file".into()));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

fn decode(buf: &[u8], key: &str) -> Result<TypeClassTable> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u16::from_le_bytes(r.array()?);
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!(
            "cache version {version}, expected {CACHE_VERSION}"
        )));
    }
    if r.take(32)? != key_bytes(key).as_slice() {
        return Err(Error::Cache("key mismatch".into()));
    }
    let n = r.u64()?;
    let d = r.u32()? as usize;
    let count = r.u64()? as usize;
    let mut classes = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let len = r.u32()? as usize;
        let composition = (0..len).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let log_count = r.f64()?;
        let per_element_log_prob = r.f64()?;
        let class_log_prob = r.f64()?;
        let flag = r.take(1)?[0];
        let exact = u128::from_le_bytes(r.array()?);
        classes.push(TypeClass {
            composition,
            log_count,
            exact_count: (flag == 1).then_some(exact),
            per_element_log_prob,
            class_log_prob,
        });
    }
    if r.pos != buf.len() {
        return Err(Error::Cache("trailing bytes".into()));
    }
    Ok(TypeClassTable::from_classes(n, d, classes))
}

fn path_for(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.tbl"))
}

pub fn store_table(dir: &Path, p: &FiniteDistribution, table: &TypeClassTable) -> Result<PathBuf> {
    let key = table_key(p, table.n());
    fs::create_dir_all(dir).map_err(|e| Error::Cache(e.to_string()))?;
    let path = path_for(dir, &key);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(table, &key)).map_err(|e| Error::Cache(e.to_string()))?;
    fs::rename(&tmp, &path).map_err(|e| Error::Cache(e.to_string()))?;
    Ok(path)
}

/// Returns `Ok(None)` when no cache entry exists.
pub fn load_table(dir: &Path, p: &FiniteDistribution, n: u64) -> Result<Option<TypeClassTable>> {
    let key = table_key(p, n);
    match fs::read(path_for(dir, &key)) {
        Ok(buf) => decode(&buf, &key).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::Cache(e.to_string())),
    }
}

/// Loads from the cache or builds and stores. Corrupt or stale entries are
/// rebuilt.
pub fn load_or_build(dir: &Path, p: &FiniteDistribution, n: u64) -> Result<TypeClassTable> {
    if let Ok(Some(t)) = load_table(dir, p, n) {
        return Ok(t);
    }
    let t = TypeClassTable::iid(p, n)?;
    store_table(dir, p, &t)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_version_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = FiniteDistribution::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(load_table(dir.path(), &p, 7).unwrap().is_none());
        let t = load_or_build(dir.path(), &p, 7).unwrap();
        let back = load_table(dir.path(), &p, 7).unwrap().unwrap();
        assert_eq!(t, back);
        assert!(load_table(dir.path(), &p, 8).unwrap().is_none());

        let path = path_for(dir.path(), &table_key(&p, 7));
        let mut bytes = fs::read(&path).unwrap();
        bytes[8] = 99;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_table(dir.path(), &p, 7),
            Err(Error::Cache(_))
        ));
        assert_eq!(load_or_build(dir.path(), &p, 7).unwrap(), t);
    }

    #[test]
    fn key_depends_on_probability_bits() {
        let a = FiniteDistribution::bernoulli(0.11).unwrap();
        let b = FiniteDistribution::bernoulli(0.11 + 1e-16).unwrap();
        assert_ne!(table_key(&a, 5), table_key(&a, 6));
        assert_ne!(table_key(&a, 5), table_key(&b, 5));
    }
}
