//! Assembling [`RateParams`] for a concrete walk.

use super::gamma::gamma_escape_integral;
use super::gn::{gn_constant, GnGrid};
use super::rates::{check_regime, RateParams};
use crate::error::Result;
use crate::walk::{covariance, StepDistribution};
use serde::Serialize;

/// Quadrature points per axis used for γ(S) when resolving parameters.
pub const DEFAULT_QUAD_POINTS: usize = 16;

/// How each constant in a resolved [`RateParams`] was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedParams {
    pub params: RateParams<f64>,
    pub quad_points: Option<usize>,
    pub gn_grid: GnGrid,
    pub gn_iterations: usize,
    pub gn_intervals: usize,
    pub gn_r_max: f64,
}

/// det Γ from the step covariance, γ(S) from the Green integral (d = 3)
/// and κ(d, p) from the radial optimiser.
pub fn resolve_rate_params(dist: &StepDistribution<f64>, p: usize, grid: &GnGrid) -> Result<ResolvedParams> {
    let d = dist.dim();
    check_regime(d, p)?;
    let det = covariance(dist)?.det;
    let (gamma, quad_points) = if d == 3 {
        (Some(gamma_escape_integral(dist, DEFAULT_QUAD_POINTS)?), Some(DEFAULT_QUAD_POINTS))
    } else {
        (None, None)
    };
    let gn = gn_constant::<f64>(d, p, grid)?;
    Ok(ResolvedParams {
        params: RateParams::new(d, p, det, gamma, gn.kappa)?,
        quad_points,
        gn_grid: grid.clone(),
        gn_iterations: gn.iterations,
        gn_intervals: gn.intervals,
        gn_r_max: gn.r_max,
    })
}
