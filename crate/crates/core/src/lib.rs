//! Intersections of independent lattice random-walk ranges in Z^2 and Z^3.
//!
//! The numerical core is generic over [`num::Real`]; the aliases below fix
//! the scalar to `f64`, which is what the studies and the CLI use.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over axes mirror the matrix notation.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod lattice;
pub mod num;
pub mod oracles;
pub mod range;
pub mod theory;
pub mod walk;

pub use error::{Error, Result};

pub type StepDist = walk::StepDistribution<f64>;
pub type Cov = walk::Covariance<f64>;
pub type Pmf = walk::Pmf<f64>;
pub type HittingLaw = walk::HittingLaw<f64>;
pub type RateParams = theory::RateParams<f64>;
pub type Distinguishability = theory::Distinguishability<f64>;
pub type GammaSeries = theory::GammaSeries<f64>;
pub type GnResult = theory::GnResult<f64>;
pub type GnFunctional = theory::GnFunctional<f64>;
