//! Replicated Monte Carlo studies of intersection counts.
//!
//! Replicate `r` of grid cell `c` draws its walks from the streams
//! `(seed, c·2^32 + r, j)`, so every cell is reproducible from the config
//! alone and results do not depend on the number of worker threads.

mod config;
mod report;
mod sample;
mod studies;

pub use config::{
    check_walk_steps, BnRule, ExperimentConfig, WalkSpec, LOG_POWER_EPSILON, MAX_TOTAL_STEPS, MAX_WALK_STEPS,
};
pub use report::{mean_stderr, quantile, with_suffix, ExperimentReport, ReportRow, CSV_COLUMNS, SCHEMA_VERSION};
pub use sample::{cell_replicate, replicate_stats, sample_replicate, ReplicateStats, WalkSummary};
pub use studies::{
    block_partition_study, block_threshold, estimate_moments, estimate_tail, lil_normalisation, lil_running_max,
    lil_track, moment_scale, tail_threshold, LIL_QUANTILES, MIN_CHECKPOINT, MIN_TAIL_COUNT,
};
