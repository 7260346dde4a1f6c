use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid step distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension {0} unsupported (lattice keys pack at most 3 coordinates)")]
    UnsupportedDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lattice coordinate {coord} outside the packable range |c| < 2^20")]
    CoordinateOverflow { coord: i64 },

    #[error("memory budget exceeded: {requested} cells requested, limit {limit}")]
    MemoryBudget { requested: u128, limit: u128 },

    #[error("dynamic-programming box too small: leaked mass {leaked:e}")]
    BoxTooSmall { leaked: f64 },

    #[error("step budget exceeded: {steps} walk steps requested, limit {limit}")]
    StepBudget { steps: u128, limit: u128 },

    #[error("enumeration budget exceeded: {paths:e} paths, limit {limit}")]
    EnumerationBudget { paths: f64, limit: u64 },

    #[error("covariance matrix is singular (det = {det:e})")]
    SingularCovariance { det: f64 },

    #[error("unsupported (d, p) = ({d}, {p}); need p(d-2) < d with d >= 2")]
    UnsupportedParams { d: usize, p: usize },

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("objective is unbounded: {0}")]
    UnboundedObjective(String),

    #[error("invariant violated ({what}) at seed {seed}, replicate {replicate}")]
    InvariantViolation {
        what: String,
        seed: u64,
        replicate: u64,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
