//! Closed-form constants, rate functions and the numerics feeding them.

mod gamma;
mod gn;
pub mod quadrature;
mod rates;
mod resolve;

pub use gamma::{
    gamma_escape_integral, gamma_escape_sum, lattice_green_integral, one_minus_char_fn, return_probability_fourier,
    GammaSeries, DEFAULT_SERIES_BUDGET, TAIL_ERROR_FACTOR,
};
pub use gn::{gn_constant, gn_constant_from, GnFunctional, GnGrid, GnResult};
pub use rates::{
    check_distinguishable, check_regime, distinguishing_objective, distinguishing_theta, legendre_rate, lil_constant,
    md_rate, psi_md, Distinguishability, PsiSpec, RateParams,
};
pub use resolve::{resolve_rate_params, ResolvedParams, DEFAULT_QUAD_POINTS};
