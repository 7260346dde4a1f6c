//! Exact expectations from dynamic programming.

use crate::error::{Error, Result};
use crate::lattice::KeyMap;
use crate::num::Real;
use crate::walk::{ConvolutionBudget, HitSweep, PmfSweep, StepDistribution};

/// `E J_n = Σ_x P{T_x <= n}^p`, summed over `|x|_∞ <= box_radius`.
///
/// Hitting probabilities for all sites come from one backward sweep. The
/// box must contain every site reachable in `n` steps; otherwise the
/// omitted contribution is reported as an error.
pub fn exact_ej<T: Real>(dist: &StepDistribution<T>, p: usize, n: usize, box_radius: i64) -> Result<T> {
    exact_ej_with(dist, p, n, box_radius, ConvolutionBudget::default())
}

pub fn exact_ej_with<T: Real>(
    dist: &StepDistribution<T>,
    p: usize,
    n: usize,
    box_radius: i64,
    budget: ConvolutionBudget,
) -> Result<T> {
    check_p(p)?;
    let mut sweep = HitSweep::new(dist, n, budget)?;
    for _ in 0..n {
        sweep.advance()?;
    }
    let (mut inside, mut outside) = (T::zero(), 0.0f64);
    for (x, q) in sweep.iter() {
        let term = q.powi(p as i32);
        if x.norm_inf() <= box_radius {
            inside += term;
        } else {
            outside += term.as_f64();
        }
    }
    if outside > 0.0 {
        return Err(Error::BoxTooSmall { leaked: outside });
    }
    Ok(inside)
}

/// Green partial sums `G_n(x) = Σ_{k <= n} P{S(k) = x}` for every reachable
/// site, keyed by packed site.
pub fn green_partial_sums<T: Real>(
    dist: &StepDistribution<T>,
    n: usize,
    budget: ConvolutionBudget,
) -> Result<KeyMap<T>> {
    budget.check(dist.dim(), n as i64 * dist.max_step())?;
    let mut green: KeyMap<T> = KeyMap::default();
    let mut sweep = PmfSweep::new(dist, budget);
    for k in 0..=n {
        if k > 0 {
            sweep.advance()?;
        }
        for (x, q) in sweep.current().iter() {
            *green.entry(x.key()?).or_insert(T::zero()) += q;
        }
    }
    Ok(green)
}

/// `E I_n = Σ_x G_n(x)^p`.
pub fn exact_ei<T: Real>(dist: &StepDistribution<T>, p: usize, n: usize) -> Result<T> {
    exact_ei_with(dist, p, n, ConvolutionBudget::default())
}

pub fn exact_ei_with<T: Real>(
    dist: &StepDistribution<T>,
    p: usize,
    n: usize,
    budget: ConvolutionBudget,
) -> Result<T> {
    check_p(p)?;
    let green = green_partial_sums(dist, n, budget)?;
    Ok(green.values().map(|g| g.powi(p as i32)).sum())
}

fn check_p(p: usize) -> Result<()> {
    if p < 1 {
        return Err(Error::param("p", "must be at least 1"));
    }
    Ok(())
}
