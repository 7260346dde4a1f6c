//! On-disk memo of oracle results.
//!
//! One text file per key under the cache directory, named by the SHA-256 of
//! `(operation, parameters, distribution)`:
//!
//! ```text
//! op = exact_EJ
//! params = p=2 n=10
//! dist = <sha-256 of the canonical distribution string>
//! value = 1.8812500000000002
//! tolerance = 1e-12
//! ```

use crate::error::Result;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Environment variable relocating the cache.
pub const CACHE_DIR_ENV: &str = "RIL_CACHE_DIR";

static CACHE_LOCK: Mutex<()> = Mutex::new(());

#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub op: String,
    pub params: String,
    pub dist: String,
    pub value: f64,
    pub tolerance: f64,
}

impl CacheEntry {
    fn render(&self) -> String {
        format!(
            "op = {}\nparams = {}\ndist = {}\nvalue = {:?}\ntolerance = {:?}\n",
            self.op, self.params, self.dist, self.value, self.tolerance
        )
    }

    fn parse(text: &str) -> Option<Self> {
        let mut fields = std::collections::HashMap::new();
        for line in text.lines() {
            let (k, v) = line.split_once(" = ")?;
            fields.insert(k.trim(), v.trim().to_string());
        }
        Some(CacheEntry {
            op: fields.remove("op")?,
            params: fields.remove("params")?,
            dist: fields.remove("dist")?,
            value: fields.remove("value")?.parse().ok()?,
            tolerance: fields.remove("tolerance")?.parse().ok()?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct OracleCache {
    dir: PathBuf,
}

impl OracleCache {
    pub fn at(dir: impl Into<PathBuf>) -> Self {
        OracleCache { dir: dir.into() }
    }

    /// `$RIL_CACHE_DIR`, else `ril-oracle-cache` under the system temp dir.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::at(dir),
            _ => Self::at(std::env::temp_dir().join("ril-oracle-cache")),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn digest(text: &str) -> String {
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path_for(&self, op: &str, params: &str, dist_hash: &str) -> PathBuf {
        let key = Self::digest(&format!("{op}\n{params}\n{dist_hash}"));
        self.dir.join(format!("{key}.txt"))
    }

    /// Looks up a stored value; unreadable or mismatching files are misses.
    pub fn get(&self, op: &str, params: &str, dist_canonical: &str) -> Option<CacheEntry> {
        let dist = Self::digest(dist_canonical);
        let path = self.path_for(op, params, &dist);
        let _guard = CACHE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let entry = CacheEntry::parse(&fs::read_to_string(path).ok()?)?;
        (entry.op == op && entry.params == params && entry.dist == dist).then_some(entry)
    }

    pub fn put(&self, op: &str, params: &str, dist_canonical: &str, value: f64, tolerance: f64) -> Result<()> {
        let entry = CacheEntry {
            op: op.to_string(),
            params: params.to_string(),
            dist: Self::digest(dist_canonical),
            value,
            tolerance,
        };
        let path = self.path_for(op, params, &entry.dist);
        let _guard = CACHE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, entry.render())?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    /// Returns the cached value or computes, stores and returns it.
    pub fn get_or_compute(
        &self,
        op: &str,
        params: &str,
        dist_canonical: &str,
        tolerance: f64,
        compute: impl FnOnce() -> Result<f64>,
    ) -> Result<f64> {
        if let Some(hit) = self.get(op, params, dist_canonical) {
            return Ok(hit.value);
        }
        let value = compute()?;
        if let Err(e) = self.put(op, params, dist_canonical, value, tolerance) {
            log::warn!("oracle cache write failed in {}: {e}", self.dir.display());
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = OracleCache::at(dir.path());
        assert!(cache.get("op", "n=1", "dist").is_none());
        let mut calls = 0;
        let v = cache
            .get_or_compute("op", "n=1", "dist", 1e-12, || {
                calls += 1;
                Ok(0.1 + 0.2)
            })
            .unwrap();
        let again = cache.get_or_compute("op", "n=1", "dist", 1e-12, || unreachable!()).unwrap();
        assert_eq!(calls, 1);
        assert_eq!(v.to_bits(), again.to_bits());
        assert!(cache.get("op", "n=2", "dist").is_none());
        let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
        let text = fs::read_to_string(files[0].as_ref().unwrap().path()).unwrap();
        assert!(text.starts_with("op = op\nparams = n=1\n"));
    }
}
