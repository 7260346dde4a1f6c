//! Experiment reports: one CSV row per cell plus a JSON mirror.

use super::config::ExperimentConfig;
use crate::error::Result;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Report format version written into every JSON mirror.
pub const SCHEMA_VERSION: u32 = 1;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 11] = [
    "experiment",
    "d",
    "p",
    "n",
    "m_or_lambda",
    "b_n",
    "estimate",
    "stderr",
    "replicates",
    "seed",
    "walltime_s",
];

/// One cell of a study. Missing values are written as `NA`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub d: usize,
    pub p: usize,
    pub n: usize,
    pub m_or_lambda: Option<f64>,
    pub b_n: Option<f64>,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub walltime_s: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        Some(x) if x.is_nan() => "NA".into(),
        Some(x) => (if x > 0.0 { "Inf" } else { "-Inf" }).into(),
        None => "NA".into(),
    }
}

impl ReportRow {
    fn fields(&self) -> [String; 11] {
        [
            self.experiment.clone(),
            self.d.to_string(),
            self.p.to_string(),
            self.n.to_string(),
            cell(self.m_or_lambda),
            cell(self.b_n),
            cell(self.estimate),
            cell(self.stderr),
            self.replicates.to_string(),
            self.seed.to_string(),
            cell(self.walltime_s),
        ]
    }
}

/// Output of one study run.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub study: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Whether the b_n rule is one of the proven-regime presets.
    pub regime: String,
    pub rows: Vec<ReportRow>,
    /// Study-specific details (thresholds, theory values, flags).
    pub details: serde_json::Value,
}

impl ExperimentReport {
    pub(crate) fn new(study: &str, config: &ExperimentConfig) -> Self {
        ExperimentReport {
            schema: SCHEMA_VERSION,
            study: study.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            regime: if config.b_n.in_proven_regime() {
                "proven".into()
            } else {
                "outside proven regime".into()
            },
            rows: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    /// Rows of experiment `name`, in report order.
    pub fn rows_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.experiment == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.fields())?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<prefix>.csv` and `<prefix>.json`, creating parent
    /// directories. Returns both paths.
    pub fn write(&self, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
        if let Some(parent) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let csv_path = with_suffix(prefix, "csv");
        let json_path = with_suffix(prefix, "json");
        fs::write(&csv_path, self.to_csv()?)?;
        fs::write(&json_path, self.to_json()? + "\n")?;
        Ok((csv_path, json_path))
    }
}

/// Appends `.ext` without replacing an existing extension.
pub fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Mean and standard error (sample std / √R) in a fixed summation order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
