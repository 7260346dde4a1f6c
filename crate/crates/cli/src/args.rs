use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "ril", version, about = "Intersections of independent lattice random walk ranges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print γ(S), κ(d,p), rates and LIL constants as JSON.
    Constants(ConstantsArgs),
    /// Moment scaling study.
    Moments(StudyArgs),
    /// Tail probability study.
    Tails(StudyArgs),
    /// Running-maximum (LIL) tracking.
    Lil(StudyArgs),
    /// Cross-block intersection study.
    Blocks(StudyArgs),
    /// Run every exact check and print a pass/fail table.
    OracleSuite(OracleArgs),
    /// Simulate walks and write their positions.
    Simulate(SimulateArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed; drawn from system entropy (and printed) when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Re-run the resolved config stored in a manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// Override a config key, e.g. `--set walk.d=3 --set n=[100,200]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    pub emit_gnuplot: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Dimension of the simple walk.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// `simple`, or a path to a step-distribution file.
    #[arg(long, default_value = "simple")]
    pub walk: String,
    /// Holding probability mixed into the walk.
    #[arg(long, default_value_t = 0.0)]
    pub laziness: f64,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// λ values at which the rate is tabulated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub lambdas: Vec<f64>,
    /// Horizon of the return-probability series (d = 3).
    #[arg(long, default_value_t = 10_000)]
    pub k: usize,
    /// Quadrature points per axis for the Green integral (d = 3).
    #[arg(long, default_value_t = 16)]
    pub quad_points: usize,
    /// Radial cells for the κ optimiser.
    #[arg(long, default_value_t = 1200)]
    pub intervals: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Smaller sizes; finishes in a few seconds.
    #[arg(long)]
    pub fast: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// Steps per walk.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Number of independent walks.
    #[arg(long, default_value_t = 2)]
    pub walks: usize,
    #[command(flatten)]
    pub common: Common,
}
