//! Experiment configuration.

use crate::error::{Error, Result};
use crate::walk::{make_lazy, make_simple_walk, read_distribution, StepDistribution};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Longest single walk a study or `simulate` will hold in memory.
pub const MAX_WALK_STEPS: usize = 1 << 25;

/// Cap on `replicates * p * Σ n` for one study.
pub const MAX_TOTAL_STEPS: u128 = 1 << 40;

pub fn check_walk_steps(n: usize) -> Result<()> {
    if n > MAX_WALK_STEPS {
        return Err(Error::StepBudget {
            steps: n as u128,
            limit: MAX_WALK_STEPS as u128,
        });
    }
    Ok(())
}

/// Which step distribution to simulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSpec {
    /// `"simple"` (nearest-neighbour) or `"file"` (atoms read from `path`).
    pub kind: String,
    /// Dimension of the simple walk; ignored for files.
    pub d: usize,
    /// Extra holding probability mixed in after loading.
    pub laziness: f64,
    pub path: Option<PathBuf>,
}

impl Default for WalkSpec {
    fn default() -> Self {
        WalkSpec {
            kind: "simple".into(),
            d: 2,
            laziness: 0.0,
            path: None,
        }
    }
}

impl WalkSpec {
    pub fn simple(d: usize, laziness: f64) -> Self {
        WalkSpec {
            d,
            laziness,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<StepDistribution<f64>> {
        let base = match self.kind.as_str() {
            "simple" => make_simple_walk(self.d)?,
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::param("walk.path", "required when walk.kind = \"file\""))?;
                read_distribution(path).map_err(|e| match e {
                    Error::Io(io) => Error::param("walk.path", format!("cannot read {}: {io}", path.display())),
                    e => e,
                })?
            }
            other => return Err(Error::param("walk.kind", format!("unknown walk kind {other:?}"))),
        };
        if !(0.0..1.0).contains(&self.laziness) {
            return Err(Error::param("walk.laziness", "must lie in [0, 1)"));
        }
        if self.laziness > 0.0 {
            make_lazy(&base, self.laziness)
        } else {
            Ok(base)
        }
    }
}

/// Exponent shortfall in the `"log^{2/3-eps}"` preset.
pub const LOG_POWER_EPSILON: f64 = 0.1;

/// How the moderate-deviation scale `b_n` is chosen for each `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum BnRule {
    /// `b_n = log log n`.
    LogLog,
    /// `b_n = (log n)^{2/3 - 0.1}`.
    LogPower,
    /// One value per entry of the `n` grid (or a single value for all).
    Explicit(Vec<f64>),
}

impl BnRule {
    pub fn name(&self) -> String {
        match self {
            BnRule::LogLog => "loglog".into(),
            BnRule::LogPower => "log^{2/3-eps}".into(),
            BnRule::Explicit(v) => format!("explicit{v:?}"),
        }
    }

    /// `b_n` for the `index`-th grid point `n`.
    pub fn value(&self, n: usize, index: usize) -> f64 {
        let ln = (n as f64).ln();
        match self {
            BnRule::LogLog => ln.ln(),
            BnRule::LogPower => ln.powf(2.0 / 3.0 - LOG_POWER_EPSILON),
            BnRule::Explicit(v) => {
                if v.len() == 1 {
                    v[0]
                } else {
                    v[index]
                }
            }
        }
    }

    /// Presets satisfy the growth conditions under which the rate results
    /// are proven; explicit values carry no such guarantee.
    pub fn in_proven_regime(&self) -> bool {
        !matches!(self, BnRule::Explicit(_))
    }
}

impl Serialize for BnRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BnRule::Explicit(v) => v.serialize(s),
            other => other.name().serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for BnRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            One(f64),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Name(name) => match name.replace('\u{2212}', "-").replace('ε', "eps").as_str() {
                "loglog" => Ok(BnRule::LogLog),
                "log^{2/3-eps}" | "log^(2/3-eps)" | "logpower" => Ok(BnRule::LogPower),
                other => Err(serde::de::Error::custom(format!(
                    "unknown b_n rule {other:?} (expected \"loglog\", \"log^{{2/3-eps}}\" or a list)"
                ))),
            },
            Raw::One(v) => Ok(BnRule::Explicit(vec![v])),
            Raw::List(v) => Ok(BnRule::Explicit(v)),
        }
    }
}

/// Every knob of every study. Unset keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub walk: WalkSpec,
    /// Number of independent walks intersected.
    pub p: usize,
    /// Walk lengths (checkpoints for LIL tracking).
    pub n: Vec<usize>,
    pub b_n: BnRule,
    /// Moment orders for the moment study.
    pub moments: Vec<usize>,
    /// Threshold multipliers for the tail study.
    pub lambdas: Vec<f64>,
    /// Threshold fraction for the block study.
    pub epsilon: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Output prefix; `.csv` and `.json` are appended.
    pub output: PathBuf,
    /// Wall-clock times make reports differ between reruns, so they are
    /// written as `NA` unless requested.
    pub record_walltime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            walk: WalkSpec::default(),
            p: 2,
            n: vec![1024],
            b_n: BnRule::LogLog,
            moments: vec![1],
            lambdas: vec![0.5, 1.0, 2.0],
            epsilon: 0.5,
            replicates: 1000,
            seed: 42,
            output: PathBuf::from("ril-out/experiment"),
            record_walltime: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// Checks cross-field constraints; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::param("p", "need at least two walks"));
        }
        if self.n.is_empty() {
            return Err(Error::param("n", "grid must not be empty"));
        }
        if self.n.iter().any(|&n| n < 2) {
            return Err(Error::param("n", "every n must be at least 2"));
        }
        if self.replicates < 2 {
            return Err(Error::param("replicates", "need at least two replicates"));
        }
        if let BnRule::Explicit(v) = &self.b_n {
            if v.len() != 1 && v.len() != self.n.len() {
                return Err(Error::param("b_n", "explicit list must have one entry or one per n"));
            }
            if v.iter().any(|&b| !(b >= 1.0) || !b.is_finite()) {
                return Err(Error::param("b_n", "values must be finite and at least 1"));
            }
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::param("lambdas", "must be positive and finite"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param("epsilon", "must be positive"));
        }
        self.walk.build()?;
        Ok(())
    }

    /// Refuses grids whose single walks or total simulated steps exceed
    /// [`MAX_WALK_STEPS`] or [`MAX_TOTAL_STEPS`].
    pub fn check_budget(&self) -> Result<()> {
        check_walk_steps(self.n.iter().copied().max().unwrap_or(0))?;
        let total = self.replicates as u128 * self.p as u128 * self.n.iter().map(|&n| n as u128).sum::<u128>();
        if total > MAX_TOTAL_STEPS {
            return Err(Error::StepBudget {
                steps: total,
                limit: MAX_TOTAL_STEPS,
            });
        }
        Ok(())
    }

    /// `(n, b_n)` for every grid point, warning when the rule is outside
    /// the proven regime.
    pub fn scales(&self) -> Vec<(usize, f64)> {
        if !self.b_n.in_proven_regime() {
            log::warn!("b_n = {} is outside the proven regime", self.b_n.name());
        }
        self.n.iter().enumerate().map(|(i, &n)| (n, self.b_n.value(n, i))).collect()
    }
}
