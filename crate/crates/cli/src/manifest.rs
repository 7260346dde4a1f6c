//! Run manifests, written before any result.

use crate::settings::SeedSource;
use crate::Outcome;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub struct Manifest {
    pub path: PathBuf,
    body: Value,
}

impl Manifest {
    /// Collects the run description; `config` is the fully resolved input.
    pub fn new(path: PathBuf, subcommand: &str, config: Value, seed: Option<(u64, SeedSource)>) -> Self {
        let (seed, seed_source) = match seed {
            Some((s, src)) => (json!(s), json!(src)),
            None => (Value::Null, Value::Null),
        };
        let body = json!({
            "schema": 1,
            "tool": "ril",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "args": std::env::args().collect::<Vec<_>>(),
            "config": config,
            "seed": seed,
            "seed_source": seed_source,
            "rng": ril_core::walk::RNG_DESCRIPTION,
            "threads": rayon::current_num_threads(),
            "cache_dir": ril_core::oracles::OracleCache::from_env().dir(),
            "outputs": {},
        });
        Manifest { path, body }
    }

    pub fn add_output(&mut self, name: &str, path: &Path) {
        self.body["outputs"][name] = json!(path);
    }

    pub fn write(&self) -> Outcome<()> {
        if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let text = serde_json::to_string_pretty(&self.body).expect("manifest serialises");
        std::fs::write(&self.path, text + "\n")?;
        Ok(())
    }
}
