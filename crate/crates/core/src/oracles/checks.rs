//! Exact and Monte Carlo checks of inequalities that hold for every walk.

use super::enumerate::{consecutive_windows, enumerated_block_moment, range_size_law, EnumerationBudget};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::num::Real;
use crate::range::{block_quantity_a_intervals, intersect_ranges};
use crate::walk::{ConvolutionBudget, HitSweep, PmfSweep, StepDistribution, Walker};
use rayon::prelude::*;
use serde::Serialize;

/// Margins below this count as violations of an exact inequality.
pub const EXACT_SLACK: f64 = 1e-12;

/// Outcome of [`check_hitting_bound`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingBoundReport {
    /// (site, horizon) pairs evaluated.
    pub checked: usize,
    pub violations: usize,
    /// Smallest `P{T_x <= k} - G_k(x) / G_k(0)` seen.
    pub min_margin: f64,
    pub worst_site: [i64; 3],
    pub worst_horizon: usize,
}

/// Checks `P{T_x <= k} >= G_k(x) / G_k(0)` with `G_k(x) = Σ_{j<=k} P{S(j) = x}`
/// for every horizon `k <= n` and every `|x|_∞ <= radius`.
pub fn check_hitting_bound<T: Real>(dist: &StepDistribution<T>, n: usize, radius: i64) -> Result<HittingBoundReport> {
    if radius < 0 {
        return Err(Error::param("radius", "must be non-negative"));
    }
    let sites = box_sites(dist.dim(), radius);
    let budget = ConvolutionBudget::default();
    let mut hits = HitSweep::new(dist, n, budget)?;
    let mut pmf = PmfSweep::new(dist, budget);
    let mut green = vec![T::zero(); sites.len()];
    let origin = sites.iter().position(Site::is_origin).expect("box contains the origin");
    let mut report = HittingBoundReport {
        checked: 0,
        violations: 0,
        min_margin: f64::INFINITY,
        worst_site: [0; 3],
        worst_horizon: 0,
    };
    for k in 0..=n {
        if k > 0 {
            hits.advance()?;
            pmf.advance()?;
        }
        for (g, x) in green.iter_mut().zip(&sites) {
            *g += pmf.current().get(x);
        }
        let g0 = green[origin];
        for (x, g) in sites.iter().zip(&green) {
            let margin = (hits.prob_hit(x) - *g / g0).as_f64();
            report.checked += 1;
            if margin < -EXACT_SLACK {
                report.violations += 1;
            }
            if margin < report.min_margin {
                report.min_margin = margin;
                report.worst_site = x.0;
                report.worst_horizon = k;
            }
        }
    }
    Ok(report)
}

fn box_sites(dim: usize, radius: i64) -> Vec<Site> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = [0i64; 3];
            for slot in c.iter_mut().take(dim) {
                *slot = (idx % side) as i64 - radius;
                idx /= side;
            }
            Site(c)
        })
        .collect()
}

/// One instance of `P{R >= a + b} <= P{R >= a} P{R >= b}` for the range
/// size `R = #S[0, n]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub a: usize,
    pub b: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
}

/// Exact check for one `(a, b)` pair.
pub fn check_range_subadditivity<T: Real>(
    dist: &StepDistribution<T>,
    n: usize,
    a: usize,
    b: usize,
    budget: EnumerationBudget,
) -> Result<SubadditivityReport> {
    let law = range_size_law(dist, n, budget)?;
    Ok(subadditivity_from_law(&law, a, b))
}

/// Exact check for every `(a, b)` with `a + b <= n + 1`.
pub fn check_range_subadditivity_all<T: Real>(
    dist: &StepDistribution<T>,
    n: usize,
    budget: EnumerationBudget,
) -> Result<Vec<SubadditivityReport>> {
    let law = range_size_law(dist, n, budget)?;
    let mut out = Vec::new();
    for a in 0..=n + 1 {
        for b in 0..=n + 1 - a {
            out.push(subadditivity_from_law(&law, a, b));
        }
    }
    Ok(out)
}

fn subadditivity_from_law<T: Real>(law: &[T], a: usize, b: usize) -> SubadditivityReport {
    let tail = |t: usize| -> f64 { law.iter().skip(t).map(|q| q.as_f64()).sum() };
    let lhs = tail(a + b);
    let rhs = tail(a) * tail(b);
    SubadditivityReport {
        a,
        b,
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

/// How the block-moment inequality is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MomentCheckMode {
    /// Both sides by exhaustive enumeration.
    Exact,
    /// Both sides from independent simulations; passes one-sided at 3σ.
    MonteCarlo { replicates: usize, seed: u64 },
}

/// Outcome of [`check_block_moment_inequality`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockMomentReport {
    pub mode: MomentCheckMode,
    pub m: usize,
    /// `(E A^m)^{1/p}`.
    pub lhs: f64,
    /// Multinomial sum of products of `(E J_{n_i}^{k_i})^{1/p}`.
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// Standard error of the margin (zero in exact mode).
    pub stderr: f64,
    pub holds: bool,
}

/// Tolerance on the margin in exact mode.
pub const EXACT_MOMENT_SLACK: f64 = 1e-10;

/// Checks `(E A^m)^{1/p} <= Σ_{k_1+..+k_a=m} m!/(k_1!..k_a!) Π_i (E J_{n_i}^{k_i})^{1/p}`
/// where `A = Σ_x Π_j Σ_i 1{x ∈ S_j(Δ_i)}` over consecutive blocks of the
/// given lengths. Only `m ∈ {1, 2}`.
pub fn check_block_moment_inequality<T: Real>(
    dist: &StepDistribution<T>,
    p: usize,
    block_lengths: &[usize],
    m: usize,
    mode: MomentCheckMode,
    budget: EnumerationBudget,
) -> Result<BlockMomentReport> {
    if !(1..=2).contains(&m) {
        return Err(Error::param("m", "only m = 1 or m = 2 is supported"));
    }
    if p < 1 {
        return Err(Error::param("p", "must be at least 1"));
    }
    if block_lengths.is_empty() {
        return Err(Error::param("block_lengths", "need at least one block"));
    }
    let inv_p = 1.0 / p as f64;
    let compositions = compositions(m, block_lengths.len());
    match mode {
        MomentCheckMode::Exact => {
            let total: usize = block_lengths.iter().sum();
            budget.check(dist.steps().count(), total)?;
            let lhs = enumerated_block_moment(dist, p, block_lengths, m, budget)?.as_f64().powf(inv_p);
            // moments[i][k] = E J_{n_i}^k
            let moments = block_lengths
                .iter()
                .map(|&len| {
                    (0..=m)
                        .map(|k| enumerated_block_moment(dist, p, &[len], k, budget).map(|v| v.as_f64()))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let rhs = multinomial_sum(&compositions, &moments, inv_p);
            let margin = rhs - lhs;
            Ok(BlockMomentReport {
                mode,
                m,
                lhs,
                rhs,
                margin,
                stderr: 0.0,
                holds: margin >= -EXACT_MOMENT_SLACK * rhs.max(1.0),
            })
        }
        MomentCheckMode::MonteCarlo { replicates, seed } => {
            monte_carlo_block_moments(dist, p, block_lengths, m, replicates, seed, &compositions, mode)
        }
    }
}

/// All `(k_1, .., k_a)` with non-negative entries summing to `m`.
fn compositions(m: usize, a: usize) -> Vec<Vec<usize>> {
    if a == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in 0..=m {
        for mut rest in compositions(m - first, a - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn multinomial_sum(compositions: &[Vec<usize>], moments: &[Vec<f64>], inv_p: f64) -> f64 {
    let m: usize = compositions[0].iter().sum();
    compositions
        .iter()
        .map(|ks| {
            let coef = factorial(m) / ks.iter().map(|&k| factorial(k)).product::<f64>();
            coef * ks.iter().zip(moments).map(|(&k, mom)| mom[k].powf(inv_p)).product::<f64>()
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn monte_carlo_block_moments<T: Real>(
    dist: &StepDistribution<T>,
    p: usize,
    block_lengths: &[usize],
    m: usize,
    replicates: usize,
    seed: u64,
    compositions: &[Vec<usize>],
    mode: MomentCheckMode,
) -> Result<BlockMomentReport> {
    if replicates < 2 {
        return Err(Error::param("replicates", "need at least two replicates"));
    }
    let walker = Walker::new(dist);
    let windows = consecutive_windows(block_lengths);
    let total = windows.last().expect("non-empty").1;
    let a = block_lengths.len();
    // per replicate: [A, J_{n_1}, .., J_{n_a}], each from its own streams
    let samples: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let r64 = r as u64;
            let mut row = Vec::with_capacity(a + 1);
            let paths = (0..p)
                .map(|j| walker.path(total, seed, r64, j as u64))
                .collect::<Result<Vec<_>>>()?;
            row.push(block_quantity_a_intervals(&paths, &windows)? as f64);
            for (i, &len) in block_lengths.iter().enumerate() {
                let paths = (0..p)
                    .map(|j| walker.path(len, seed, r64, (p * (i + 1) + j) as u64))
                    .collect::<Result<Vec<_>>>()?;
                row.push(intersect_ranges(&paths, len)? as f64);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let rf = replicates as f64;
    let inv_p = 1.0 / p as f64;
    let powm = |x: f64| x.powi(m as i32);

    let (a_mean, a_var) = mean_var(samples.iter().map(|row| powm(row[0])));
    let lhs = a_mean.powf(inv_p);
    let lhs_var = (inv_p * a_mean.powf(inv_p - 1.0)).powi(2) * a_var / rf;

    // per block: means of J, J^2 and their covariance
    let mut moments = Vec::with_capacity(a);
    let mut covs = Vec::with_capacity(a);
    for i in 0..a {
        let col: Vec<f64> = samples.iter().map(|row| row[i + 1]).collect();
        let (m1, _) = mean_var(col.iter().copied());
        let (m2, _) = mean_var(col.iter().map(|x| x * x));
        let cov = covariance_j(&col, m1, m2);
        moments.push(vec![1.0, m1, m2]);
        covs.push(cov);
    }
    let rhs = multinomial_sum(compositions, &moments, inv_p);
    // delta method: blocks are independent of each other
    let mut rhs_var = 0.0;
    for i in 0..a {
        let mut grad = [0.0f64; 2];
        for ks in compositions {
            let k = ks[i];
            if k == 0 {
                continue;
            }
            let coef = factorial(m) / ks.iter().map(|&k| factorial(k)).product::<f64>();
            let term = coef * ks.iter().zip(&moments).map(|(&k, mom)| mom[k].powf(inv_p)).product::<f64>();
            grad[k - 1] += term * inv_p / moments[i][k];
        }
        let c = &covs[i];
        rhs_var += (grad[0] * grad[0] * c[0][0] + 2.0 * grad[0] * grad[1] * c[0][1] + grad[1] * grad[1] * c[1][1]) / rf;
    }
    let stderr = (lhs_var + rhs_var).sqrt();
    let margin = rhs - lhs;
    Ok(BlockMomentReport {
        mode,
        m,
        lhs,
        rhs,
        margin,
        stderr,
        holds: margin >= -3.0 * stderr,
    })
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in values {
        n += 1.0;
        let delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    (mean, if n > 1.0 { m2 / (n - 1.0) } else { 0.0 })
}

/// Sample covariance of `(J, J^2)`.
fn covariance_j(col: &[f64], m1: f64, m2: f64) -> [[f64; 2]; 2] {
    let n = col.len() as f64;
    let mut c = [[0.0; 2]; 2];
    for &x in col {
        let (u, v) = (x - m1, x * x - m2);
        c[0][0] += u * u;
        c[0][1] += u * v;
        c[1][1] += v * v;
    }
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    c[1][0] = c[0][1];
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{make_lazy, make_simple_walk};

    #[test]
    fn hitting_bound_small() {
        let d = make_lazy(&make_simple_walk::<f64>(2).unwrap(), 0.5).unwrap();
        let r = check_hitting_bound(&d, 20, 5).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
        assert_eq!(r.checked, 21 * 121);
        // the origin gives equality
        assert!(r.min_margin <= 1e-15);
    }

    #[test]
    fn subadditivity_edges() {
        let d = make_simple_walk::<f64>(2).unwrap();
        let b = EnumerationBudget::default();
        let r = check_range_subadditivity(&d, 5, 0, 3, b).unwrap();
        assert!(r.margin.abs() < 1e-15);
        let r = check_range_subadditivity(&d, 5, 4, 3, b).unwrap();
        assert_eq!(r.lhs, 0.0);
        let all = check_range_subadditivity_all(&d, 7, b).unwrap();
        assert!(all.iter().all(|r| r.margin >= -EXACT_SLACK));
        let r = all.iter().find(|r| r.a == 3 && r.b == 3).unwrap();
        assert!(r.margin >= 0.0);
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(1, 3).len(), 3);
    }

    #[test]
    fn block_moment_single_block_is_equality() {
        let d = make_simple_walk::<f64>(2).unwrap();
        for m in 1..=2 {
            let r = check_block_moment_inequality(&d, 2, &[4], m, MomentCheckMode::Exact, EnumerationBudget::default())
                .unwrap();
            assert!(r.margin.abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn block_moment_exact_two_blocks() {
        let d = make_simple_walk::<f64>(2).unwrap();
        for m in 1..=2 {
            let r = check_block_moment_inequality(&d, 2, &[2, 2], m, MomentCheckMode::Exact, EnumerationBudget::default())
                .unwrap();
            assert!(r.holds, "{r:?}");
        }
        assert!(check_block_moment_inequality(&d, 2, &[2, 2], 3, MomentCheckMode::Exact, EnumerationBudget::default()).is_err());
    }

    #[test]
    fn block_moment_monte_carlo_small() {
        let d = make_simple_walk::<f64>(2).unwrap();
        let mode = MomentCheckMode::MonteCarlo {
            replicates: 2000,
            seed: 7,
        };
        let r = check_block_moment_inequality(&d, 2, &[10, 10], 2, mode, EnumerationBudget::default()).unwrap();
        assert!(r.holds && r.stderr > 0.0, "{r:?}");
    }
}
