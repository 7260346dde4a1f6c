//! Config loading: file, manifest, `--set` overrides, seed resolution.

use crate::{CliError, Outcome};
use ril_core::experiments::ExperimentConfig;
use std::path::Path;
use toml::{Table, Value};

/// Where the run's seed came from.
#[derive(Clone, Copy, Debug, serde::Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Cli,
    Config,
    Entropy,
}

pub fn load_table(config: Option<&Path>, manifest: Option<&Path>) -> Outcome<Table> {
    if let Some(path) = manifest {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("manifest", format!("cannot read {}: {e}", path.display())))?;
        let json: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::config("manifest", e.to_string()))?;
        let cfg: ExperimentConfig = serde_json::from_value(json.get("config").cloned().unwrap_or_default())
            .map_err(|e| CliError::config("manifest.config", e.to_string()))?;
        return toml::from_str(&cfg.to_toml()).map_err(|e| CliError::config("manifest.config", e.to_string()));
    }
    match config {
        None => Ok(Table::new()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::config("config", e.message().to_string()))
        }
    }
}

/// Applies `key=value` overrides; values are parsed as TOML and fall back
/// to plain strings.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Outcome<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::config("set", format!("expected KEY=VALUE, got {item:?}")))?;
        let key = key.trim();
        let value = parse_value(raw.trim());
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| CliError::config("set", "empty key"))?;
        let mut node = &mut *table;
        for part in parts {
            let entry = node.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
            node = match entry {
                Value::Table(t) => t,
                _ => return Err(CliError::config("set", format!("{key}: {part} is not a section"))),
            };
        }
        node.insert(last.to_string(), value);
    }
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Resolves the seed: `--seed`, then the config, then system entropy.
pub fn resolve_seed(table: &mut Table, cli_seed: Option<u64>) -> Outcome<(u64, SeedSource)> {
    let (seed, source) = match (cli_seed, table.get("seed")) {
        (Some(s), _) => (s, SeedSource::Cli),
        (None, Some(Value::Integer(s))) if *s >= 0 => (*s as u64, SeedSource::Config),
        (None, Some(_)) => return Err(CliError::config("seed", "must be a non-negative integer")),
        (None, None) => (rand::random::<u64>() >> 1, SeedSource::Entropy),
    };
    // TOML integers are signed 64-bit
    let stored = i64::try_from(seed).map_err(|_| CliError::config("seed", "must be below 2^63"))?;
    table.insert("seed".into(), Value::Integer(stored));
    Ok((seed, source))
}

pub fn into_config(table: Table) -> Outcome<ExperimentConfig> {
    let text = toml::to_string(&table).map_err(|e| CliError::config("config", e.to_string()))?;
    let cfg = ExperimentConfig::from_toml(&text).map_err(|e| CliError::config("config", e.to_string()))?;
    cfg.validate().map_err(CliError::from_core)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_parse() {
        let mut t = Table::new();
        apply_overrides(
            &mut t,
            &["walk.d=3".into(), "n=[10, 20]".into(), "b_n=loglog".into(), "walk.kind=simple".into()],
        )
        .unwrap();
        let cfg = into_config(t).unwrap();
        assert_eq!(cfg.walk.d, 3);
        assert_eq!(cfg.n, vec![10, 20]);
    }

    #[test]
    fn seed_precedence() {
        let mut t = Table::new();
        t.insert("seed".into(), Value::Integer(5));
        assert_eq!(resolve_seed(&mut t.clone(), Some(9)).unwrap(), (9, SeedSource::Cli));
        assert_eq!(resolve_seed(&mut t, None).unwrap(), (5, SeedSource::Config));
        let mut empty = Table::new();
        assert_eq!(resolve_seed(&mut empty, None).unwrap().1, SeedSource::Entropy);
    }
}
