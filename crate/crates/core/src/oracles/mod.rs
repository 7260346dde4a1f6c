//! Slow, exact reference computations used to validate the fast paths.

mod cache;
mod checks;
mod enumerate;
mod exact;
mod shooting;

pub use cache::{CacheEntry, OracleCache, CACHE_DIR_ENV};
pub use checks::{
    check_hitting_bound, check_block_moment_inequality, check_range_subadditivity, check_range_subadditivity_all,
    BlockMomentReport, HittingBoundReport, MomentCheckMode, SubadditivityReport, EXACT_MOMENT_SLACK, EXACT_SLACK,
};
pub use enumerate::{
    consecutive_windows, enumerate_paths, enumerated_block_moment, enumerated_ei, enumerated_ej, range_size_law,
    EnumerationBudget, LocalTimeVisitor, MassVisitor, PathVisitor, RangeLawVisitor, WindowCountVisitor,
};
pub use exact::{exact_ei, exact_ei_with, exact_ej, exact_ej_with, green_partial_sums};
pub use shooting::{ground_state_shooting, GroundState};
