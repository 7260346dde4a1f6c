//! Escape probability γ(S) of a transient walk by two independent routes:
//! the return-probability series and the lattice Green integral.

use super::quadrature::{cube_gauss, gauss_legendre};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::walk::{char_fn, ConvolutionBudget, PmfSweep, StepDistribution};
use serde::Serialize;

/// Box budget used by [`gamma_escape_sum`] unless the caller overrides it:
/// radius 100, i.e. exact return probabilities up to k = 200 for unit steps.
pub const DEFAULT_SERIES_BUDGET: ConvolutionBudget = ConvolutionBudget {
    max_cells: 201 * 201 * 201,
};

/// Fitted tail times this factor is the reported truncation error.
pub const TAIL_ERROR_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaSeries<T> {
    /// γ = 1 / (partial sum + tail).
    pub estimate: T,
    pub error_bound: T,
    /// Σ_{k <= exact_horizon} P{S(k) = 0}, computed exactly.
    pub partial_sum: T,
    /// Extrapolated Σ_{k > exact_horizon} P{S(k) = 0}.
    pub tail: T,
    /// Fitted amplitude `c` in `P{S(k) = 0} ~ c k^{-d/2}`.
    pub fit_amplitude: T,
    /// Fraction of the fitted decade with non-zero return probability
    /// (1/2 for walks of period two).
    pub fit_density: T,
    pub requested_horizon: usize,
    pub exact_horizon: usize,
}

/// γ(S) from `(Σ_k P{S(k) = 0})^{-1}`.
///
/// Return probabilities are exact up to `exact_horizon = min(k_max, H)`
/// where `H` is twice the largest convolution radius the budget admits;
/// `P{S(2j) = 0} = Σ_x P{S(j) = x} P{S(j) = -x}` halves the box needed.
/// Beyond `exact_horizon` the tail is extrapolated from a fit of
/// `log P = log c - (d/2) log k` over the last computed decade, summed
/// analytically. With `k_max < 100` no tail is appended and the error
/// bound is the estimate itself (γ lies in `(0, estimate]`).
pub fn gamma_escape_sum<T: Real>(
    dist: &StepDistribution<T>,
    k_max: usize,
    budget: ConvolutionBudget,
) -> Result<GammaSeries<T>> {
    let d = dist.dim();
    if d < 3 {
        return Err(Error::param("d", "return series diverges for d <= 2"));
    }
    let s = dist.max_step() as usize;
    let radius_cap = budget.max_radius(d) as usize / s.max(1);
    let horizon = k_max.min(2 * radius_cap.saturating_sub(1));
    let half = horizon.div_ceil(2);
    let mut returns = vec![T::zero(); horizon + 1];
    let mut sweep = PmfSweep::new(dist, budget);
    let mut prev = sweep.current().clone();
    returns[0] = T::one();
    for j in 0..=half {
        let next = sweep.advance()?.clone();
        let even = 2 * j;
        let odd = 2 * j + 1;
        if even <= horizon && even > 0 {
            returns[even] = prev.iter().map(|(x, q)| q * prev.get(&-x)).sum();
        }
        if odd <= horizon {
            returns[odd] = prev.iter().map(|(x, q)| q * next.get(&-x)).sum();
        }
        prev = next;
    }
    let partial: T = returns.iter().copied().sum();
    if k_max < 100 {
        let estimate = partial.recip();
        return Ok(GammaSeries {
            estimate,
            error_bound: estimate,
            partial_sum: partial,
            tail: T::zero(),
            fit_amplitude: T::zero(),
            fit_density: T::zero(),
            requested_horizon: k_max,
            exact_horizon: horizon,
        });
    }
    let decay = T::lit(d as f64 / 2.0);
    let lo = (horizon / 10).max(1);
    let (mut log_c, mut nonzero) = (T::zero(), 0usize);
    for (k, &q) in returns.iter().enumerate().skip(lo) {
        if q > T::zero() {
            log_c += q.ln() + decay * T::from_usize_lossy(k).ln();
            nonzero += 1;
        }
    }
    if nonzero == 0 {
        return Err(Error::NonConvergence {
            what: "return-series tail fit",
            detail: "no returns in the last decade".into(),
        });
    }
    let amplitude = (log_c / T::from_usize_lossy(nonzero)).exp();
    let density = T::from_usize_lossy(nonzero) / T::from_usize_lossy(horizon + 1 - lo);
    // Σ_{k > K} k^{-a} ≈ ∫_{K + 1/2}^∞ x^{-a} dx
    let start = T::from_usize_lossy(horizon) + T::lit(0.5);
    let tail = density * amplitude * start.powf(T::one() - decay) / (decay - T::one());
    let total = partial + tail;
    let estimate = total.recip();
    let tail_error = T::lit(TAIL_ERROR_FACTOR) * tail;
    // γ moves by at most tail_error / total^2 to first order; use the exact
    // interval bound instead of the linearisation.
    let low = (total + tail_error).recip();
    let high = if tail_error < total {
        (total - tail_error).recip().min(partial.recip())
    } else {
        partial.recip()
    };
    Ok(GammaSeries {
        estimate,
        error_bound: (estimate - low).max(high - estimate),
        partial_sum: partial,
        tail,
        fit_amplitude: amplitude,
        fit_density: density,
        requested_horizon: k_max,
        exact_horizon: horizon,
    })
}

/// `1 - φ(λ) = Σ q · 2 sin²(⟨λ, v⟩ / 2)`, free of cancellation near 0.
pub fn one_minus_char_fn<T: Real>(dist: &StepDistribution<T>, lambda: &[T]) -> T {
    let two = T::lit(2.0);
    let mut acc = T::zero();
    for &(v, q) in dist.atoms() {
        let mut dot = T::zero();
        for (l, &c) in lambda.iter().zip(v.0.iter()) {
            dot += *l * T::lit(c as f64);
        }
        let s = (dot / two).sin();
        acc += q * two * s * s;
    }
    acc
}

/// Refinement depth for cells whose closure contains the singular point.
const SINGULAR_DEPTH: usize = 48;
/// Extra subdivision levels for cells close to the singularity.
const NEAR_DEPTH: usize = 12;

/// Lattice Green function at the origin,
/// `G = (2π)^{-d} ∫_{[-π,π]^d} dλ / (1 - φ(λ))`.
///
/// `quad_points` is the number of cells per axis (rounded up to even so
/// the singular point sits on a cell corner). Each regular cell uses a
/// 6-point Gauss-Legendre tensor rule; cells within one side length of
/// the origin are split recursively, and the cells touching the origin
/// are split down to a side of `2π·2^{-48}/quad_points`, where the
/// remaining corner carries relative weight below 1e-13.
pub fn lattice_green_integral<T: Real>(dist: &StepDistribution<T>, quad_points: usize) -> Result<T> {
    let d = dist.dim();
    if d < 3 {
        return Err(Error::param("d", "Green integral diverges for d <= 2"));
    }
    let cells = (quad_points.max(2) + 1) & !1;
    let pi = T::PI();
    let side = T::lit(2.0) * pi / T::from_usize_lossy(cells);
    let rule = gauss_legendre::<T>(6);
    let mut bad: Option<f64> = None;
    let mut integrand = |x: &[T]| {
        let denom = one_minus_char_fn(dist, x);
        if !(denom > T::zero()) {
            bad.get_or_insert(x.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max));
        }
        denom.recip()
    };
    let mut total = T::zero();
    let mut idx = vec![0usize; d];
    let mut lo = vec![T::zero(); d];
    loop {
        for a in 0..d {
            lo[a] = -pi + side * T::from_usize_lossy(idx[a]);
        }
        total += integrate_cell(&mut integrand, d, &lo, side, &rule, 0, 0);
        let mut a = 0;
        while a < d {
            idx[a] += 1;
            if idx[a] < cells {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
        if a == d {
            break;
        }
    }
    if let Some(at) = bad {
        return Err(Error::NonConvergence {
            what: "Green integral",
            detail: format!(
                "1 - φ vanishes away from the origin (|λ|_∞ ≈ {at:.3}); the steps do not generate Z^{d}"
            ),
        });
    }
    if !total.is_finite() {
        return Err(Error::NonConvergence {
            what: "Green integral",
            detail: "non-finite quadrature sum".into(),
        });
    }
    Ok(total / (T::lit(2.0) * pi).powi(d as i32))
}

fn integrate_cell<T: Real, F: FnMut(&[T]) -> T>(
    f: &mut F,
    d: usize,
    lo: &[T],
    side: T,
    rule: &(Vec<T>, Vec<T>),
    singular_depth: usize,
    near_depth: usize,
) -> T {
    // distance from the origin to the closed cell
    let mut touches = true;
    let mut dist2 = T::zero();
    for &l in lo {
        let hi = l + side;
        let gap = if l > T::zero() {
            l
        } else if hi < T::zero() {
            -hi
        } else {
            T::zero()
        };
        if gap > T::zero() {
            touches = false;
        }
        dist2 += gap * gap;
    }
    let split = if touches {
        if singular_depth >= SINGULAR_DEPTH {
            return T::zero();
        }
        Some((singular_depth + 1, near_depth))
    } else if dist2.sqrt() < side && near_depth < NEAR_DEPTH {
        Some((singular_depth, near_depth + 1))
    } else {
        None
    };
    let Some((sd, nd)) = split else {
        return cube_gauss(f, d, lo, side, rule);
    };
    let half = side / T::lit(2.0);
    let mut sub = vec![T::zero(); d];
    let mut total = T::zero();
    for corner in 0..(1usize << d) {
        for a in 0..d {
            sub[a] = lo[a] + if corner & (1 << a) != 0 { half } else { T::zero() };
        }
        total += integrate_cell(f, d, &sub, half, rule, sd, nd);
    }
    total
}

/// γ(S) = 1 / G from the Green integral.
pub fn gamma_escape_integral<T: Real>(dist: &StepDistribution<T>, quad_points: usize) -> Result<T> {
    Ok(lattice_green_integral(dist, quad_points)?.recip())
}

/// `P{S(k) = 0} = (2π)^{-d} ∫ φ(λ)^k dλ` by a tensor Gauss-Legendre rule
/// with `order` nodes per axis on each of `cells` sub-intervals.
pub fn return_probability_fourier<T: Real>(
    dist: &StepDistribution<T>,
    k: usize,
    cells: usize,
    order: usize,
) -> T {
    let d = dist.dim();
    let pi = T::PI();
    let side = T::lit(2.0) * pi / T::from_usize_lossy(cells);
    let rule = gauss_legendre::<T>(order);
    let mut f = |x: &[T]| char_fn(dist, x).powi(k as i32);
    let mut total = T::zero();
    let mut idx = vec![0usize; d];
    let mut lo = vec![T::zero(); d];
    'outer: loop {
        for a in 0..d {
            lo[a] = -pi + side * T::from_usize_lossy(idx[a]);
        }
        total += cube_gauss(&mut f, d, &lo, side, &rule);
        for a in 0..d {
            idx[a] += 1;
            if idx[a] < cells {
                continue 'outer;
            }
            idx[a] = 0;
        }
        break;
    }
    total / (T::lit(2.0) * pi).powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{make_lazy, make_simple_walk};

    #[test]
    fn one_minus_phi_matches_direct() {
        let d = make_lazy(&make_simple_walk::<f64>(3).unwrap(), 0.2).unwrap();
        for l in [[0.1, 0.2, -0.3], [3.0, -2.0, 1.0]] {
            let direct = 1.0 - char_fn(&d, &l);
            assert!((one_minus_char_fn(&d, &l) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn series_with_no_tail_is_bounded_by_one() {
        let d = make_simple_walk::<f64>(3).unwrap();
        let g = gamma_escape_sum(&d, 0, DEFAULT_SERIES_BUDGET).unwrap();
        assert_eq!(g.partial_sum, 1.0);
        assert!(g.estimate <= 1.0);
        assert!(gamma_escape_sum(&make_simple_walk::<f64>(2).unwrap(), 200, DEFAULT_SERIES_BUDGET).is_err());
    }

    #[test]
    fn small_horizon_partial_sums_are_exact() {
        // P{S(2) = 0} = 1/6 and P{S(4) = 0} = 15/216 for the simple walk in d = 3
        let d = make_simple_walk::<f64>(3).unwrap();
        let g = gamma_escape_sum(&d, 4, DEFAULT_SERIES_BUDGET).unwrap();
        assert!((g.partial_sum - (1.0 + 1.0 / 6.0 + 15.0 / 216.0)).abs() < 1e-15);
    }

    #[test]
    fn green_integral_rejects_low_dimension() {
        let d = make_simple_walk::<f64>(2).unwrap();
        assert!(lattice_green_integral(&d, 8).is_err());
    }
}
