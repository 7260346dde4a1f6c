//! Numerical Gagliardo-Nirenberg constant over radial profiles.
//!
//! The ratio maximised is
//! `‖f‖_{2p} / (‖∇f‖_2^{a} ‖f‖_2^{1-a})` with `a = d(p-1)/(2p)`,
//! discretised on a logarithmic radial grid `r_i = r_min e^{i h}`.
//! Integrals of `f^2` and `|f|^{2p}` use Simpson's rule in `s = ln r`
//! (plus the ball `r < r_min` with `f ≡ f_0`); the Dirichlet energy uses
//! centred differences on each cell. The outer node is pinned to zero.

use super::quadrature::simpson_weights;
use super::rates::check_regime;
use crate::error::{Error, Result};
use crate::num::Real;
use serde::Serialize;

/// Radial discretisation and optimiser controls.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GnGrid {
    pub r_min: f64,
    /// Initial outer radius; doubled while the profile's tail is visible.
    pub r_max: f64,
    /// Number of cells on the initial grid (made even).
    pub intervals: usize,
    pub max_iter: usize,
    /// Stop once the log-ratio gains less than this per step, repeatedly.
    pub tol: f64,
    /// Largest share of any norm allowed beyond `r_max / 2`.
    pub tail_tol: f64,
    pub max_extensions: usize,
}

impl Default for GnGrid {
    fn default() -> Self {
        GnGrid {
            r_min: 1e-4,
            r_max: 32.0,
            intervals: 1200,
            max_iter: 50_000,
            tol: 1e-13,
            tail_tol: 1e-10,
            max_extensions: 6,
        }
    }
}

impl GnGrid {
    /// Same range with twice as many cells.
    pub fn refined(&self) -> Self {
        GnGrid {
            intervals: self.intervals * 2,
            ..self.clone()
        }
    }
}

/// Surface area of the unit sphere in R^d.
fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dimension checked by caller"),
    }
}

/// The discrete functional. Profiles are sampled at [`GnFunctional::radii`]
/// and their last entry is treated as zero.
#[derive(Clone, Debug)]
pub struct GnFunctional<T> {
    d: usize,
    p: usize,
    a: T,
    radii: Vec<T>,
    /// Quadrature weights for `∫ g(|x|) dx` at the nodes.
    weights: Vec<T>,
    /// Cell coefficients: energy = Σ c_i (f_{i+1} - f_i)^2.
    stiffness: Vec<T>,
}

impl<T: Real> GnFunctional<T> {
    pub fn new(d: usize, p: usize, r_min: f64, r_max: f64, intervals: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if p < 2 {
            return Err(Error::param("p", "must be at least 2"));
        }
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::param("r_max", "need 0 < r_min < r_max"));
        }
        let n = intervals + intervals % 2;
        if n < 4 {
            return Err(Error::param("intervals", "need at least four cells"));
        }
        let h = (r_max / r_min).ln() / n as f64;
        let omega = sphere_area(d);
        let radii: Vec<f64> = (0..=n).map(|i| r_min * (i as f64 * h).exp()).collect();
        let simpson = simpson_weights::<f64>(n + 1, h);
        let mut weights: Vec<f64> = radii
            .iter()
            .zip(&simpson)
            .map(|(r, w)| omega * w * r.powi(d as i32))
            .collect();
        weights[0] += omega * r_min.powi(d as i32) / d as f64;
        let stiffness = (0..n)
            .map(|i| {
                let mid = r_min * ((i as f64 + 0.5) * h).exp();
                omega * mid.powi(d as i32 - 2) / h
            })
            .collect::<Vec<f64>>();
        let lift = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
        Ok(GnFunctional {
            d,
            p,
            a: T::lit(d as f64 * (p as f64 - 1.0) / (2.0 * p as f64)),
            radii: lift(radii),
            weights: lift(weights),
            stiffness: lift(stiffness),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    /// Samples `g` at the nodes, pinning the outer node to zero.
    pub fn sample(&self, g: impl Fn(T) -> T) -> Vec<T> {
        let mut f: Vec<T> = self.radii.iter().map(|&r| g(r)).collect();
        *f.last_mut().expect("nonempty grid") = T::zero();
        f
    }

    fn check_len(&self, f: &[T]) {
        assert_eq!(f.len(), self.radii.len(), "profile length must match the grid");
    }

    /// `‖f‖_2^2`.
    pub fn mass(&self, f: &[T]) -> T {
        self.check_len(f);
        let last = f.len() - 1;
        f[..last].iter().zip(&self.weights).map(|(&v, &w)| w * v * v).sum()
    }

    /// `‖f‖_{2p}^{2p}`.
    pub fn power(&self, f: &[T]) -> T {
        self.check_len(f);
        let last = f.len() - 1;
        f[..last]
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * v.abs().powi(2 * self.p as i32))
            .sum()
    }

    /// `‖∇f‖_2^2`.
    pub fn energy(&self, f: &[T]) -> T {
        self.check_len(f);
        let last = f.len() - 1;
        (0..last)
            .map(|i| {
                let next = if i + 1 == last { T::zero() } else { f[i + 1] };
                let diff = next - f[i];
                self.stiffness[i] * diff * diff
            })
            .sum()
    }

    /// The Gagliardo-Nirenberg ratio of `f`; zero for the zero profile.
    pub fn ratio(&self, f: &[T]) -> T {
        let (m, k, q) = (self.mass(f), self.energy(f), self.power(f));
        if !(m > T::zero() && k > T::zero()) {
            return T::zero();
        }
        q.powf(T::lit(0.5 / self.p as f64)) / (k.powf(self.a / T::lit(2.0)) * m.powf((T::one() - self.a) / T::lit(2.0)))
    }

    fn log_ratio(&self, f: &[T]) -> T {
        self.ratio(f).ln()
    }

    /// Gradient of the log-ratio with respect to the free nodes, plus the
    /// three norms it was built from.
    fn gradient(&self, f: &[T], grad: &mut [T]) -> (T, T, T) {
        let last = f.len() - 1;
        let (m, k, q) = (self.mass(f), self.energy(f), self.power(f));
        let pow = 2 * self.p as i32 - 2;
        for i in 0..last {
            let left = if i == 0 { T::zero() } else { self.stiffness[i - 1] * (f[i] - f[i - 1]) };
            let next = if i + 1 == last { T::zero() } else { f[i + 1] };
            let right = self.stiffness[i] * (f[i] - next);
            let stiff = left + right;
            grad[i] = self.weights[i] * f[i].abs().powi(pow) * f[i] / q
                - self.a * stiff / k
                - (T::one() - self.a) * self.weights[i] * f[i] / m;
        }
        grad[last] = T::zero();
        (m, k, q)
    }

    /// Solves `(a K_mat / k + (1 - a) W / m) x = rhs` on the free nodes
    /// (tridiagonal, Thomas algorithm).
    fn precondition(&self, m: T, k: T, rhs: &[T], out: &mut [T], scratch: &mut [T]) {
        let last = rhs.len() - 1;
        let (ca, cm) = (self.a / k, (T::one() - self.a) / m);
        let diag = |i: usize| {
            let left = if i == 0 { T::zero() } else { self.stiffness[i - 1] };
            ca * (left + self.stiffness[i]) + cm * self.weights[i]
        };
        let off = |i: usize| -ca * self.stiffness[i];
        // forward sweep
        let mut denom = diag(0);
        scratch[0] = off(0) / denom;
        out[0] = rhs[0] / denom;
        for i in 1..last {
            denom = diag(i) - off(i - 1) * scratch[i - 1];
            scratch[i] = if i + 1 < last { off(i) / denom } else { T::zero() };
            out[i] = (rhs[i] - off(i - 1) * out[i - 1]) / denom;
        }
        for i in (0..last.saturating_sub(1)).rev() {
            let next = out[i + 1];
            out[i] -= scratch[i] * next;
        }
        out[last] = T::zero();
    }
}

/// Outcome of [`gn_constant`].
#[derive(Clone, Debug, Serialize)]
pub struct GnResult<T> {
    pub kappa: T,
    pub radii: Vec<T>,
    /// Maximising profile with `‖f‖_2 = 1`.
    pub profile: Vec<T>,
    /// Ratio after every accepted step, starting from the initial profile.
    pub history: Vec<T>,
    /// Index into `history` where each grid begins; the ratio is only
    /// comparable within one grid.
    pub stage_starts: Vec<usize>,
    pub iterations: usize,
    /// Grid actually used after any outward extension.
    pub r_max: f64,
    pub intervals: usize,
}

impl<T> GnResult<T> {
    /// `history` split by grid.
    pub fn stages(&self) -> impl Iterator<Item = &[T]> + '_ {
        let ends = self.stage_starts.iter().skip(1).copied().chain(std::iter::once(self.history.len()));
        self.stage_starts.iter().zip(ends).map(|(&a, b)| &self.history[a..b])
    }
}

/// Maximises the ratio starting from a Gaussian profile.
pub fn gn_constant<T: Real>(d: usize, p: usize, grid: &GnGrid) -> Result<GnResult<T>> {
    gn_constant_from(d, p, grid, |r: f64| (-r * r / 2.0).exp())
}

/// Maximises the ratio from the initial profile `init` (sampled at the
/// nodes; must not vanish identically).
pub fn gn_constant_from<T: Real>(
    d: usize,
    p: usize,
    grid: &GnGrid,
    init: impl Fn(f64) -> f64,
) -> Result<GnResult<T>> {
    check_regime(d, p)?;
    let mut r_max = grid.r_max;
    let mut intervals = grid.intervals + grid.intervals % 2;
    let h = (grid.r_max / grid.r_min).ln() / intervals as f64;
    let mut functional = GnFunctional::<T>::new(d, p, grid.r_min, r_max, intervals)?;
    let mut f = functional.sample(|r| T::lit(init(r.as_f64())));
    let mut history = Vec::new();
    let mut stage_starts = Vec::new();
    let mut iterations = 0;
    for extension in 0..=grid.max_extensions {
        stage_starts.push(history.len());
        let run = ascend(&functional, &mut f, grid, &mut history)?;
        iterations += run;
        let tail = tail_share(&functional, &f);
        if tail <= grid.tail_tol {
            break;
        }
        if extension == grid.max_extensions {
            return Err(Error::NonConvergence {
                what: "gn_constant",
                detail: format!("profile tail share {tail:.3e} beyond r = {} after extensions", r_max / 2.0),
            });
        }
        // extend outward keeping the spacing in ln r
        let radii: Vec<f64> = functional.radii().iter().map(|r| r.as_f64()).collect();
        let old: Vec<f64> = f.iter().map(|v| v.as_f64()).collect();
        r_max *= 2.0;
        intervals += (std::f64::consts::LN_2 / h).round() as usize;
        intervals += intervals % 2;
        functional = GnFunctional::new(d, p, grid.r_min, r_max, intervals)?;
        f = functional.sample(|r| T::lit(interpolate(&radii, &old, r.as_f64())));
    }
    let kappa = functional.ratio(&f);
    Ok(GnResult {
        kappa,
        radii: functional.radii().to_vec(),
        profile: f,
        history,
        stage_starts,
        iterations,
        r_max,
        intervals,
    })
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.iter().position(|&v| v >= x) {
        None => 0.0,
        Some(0) => ys[0],
        Some(j) => {
            let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
            ys[j - 1] * (1.0 - t) + ys[j] * t
        }
    }
}

/// Largest fraction of mass, power or energy carried by `r > r_max / 2`.
fn tail_share<T: Real>(functional: &GnFunctional<T>, f: &[T]) -> f64 {
    let half = functional.radii().last().expect("nonempty").as_f64() / 2.0;
    let cut = functional.radii().iter().position(|r| r.as_f64() > half).unwrap_or(f.len() - 1);
    let mut outer = f.to_vec();
    outer[..cut].iter_mut().for_each(|v| *v = T::zero());
    let mass = (functional.mass(&outer) / functional.mass(f)).as_f64();
    let power = (functional.power(&outer) / functional.power(f)).as_f64();
    // energy of cells entirely past the cut
    let stiff = &functional.stiffness;
    let last = f.len() - 1;
    let outer_energy: f64 = (cut..last)
        .map(|i| {
            let next = if i + 1 == last { 0.0 } else { f[i + 1].as_f64() };
            stiff[i].as_f64() * (next - f[i].as_f64()).powi(2)
        })
        .sum();
    let energy = outer_energy / functional.energy(f).as_f64();
    mass.max(power).max(energy)
}

/// Consecutive sub-tolerance gains required to stop.
const STALL_STEPS: usize = 10;

/// Preconditioned gradient ascent on the log-ratio with backtracking and
/// renormalisation to unit mass. Returns the number of accepted steps.
fn ascend<T: Real>(functional: &GnFunctional<T>, f: &mut Vec<T>, grid: &GnGrid, history: &mut Vec<T>) -> Result<usize> {
    let n = f.len();
    let normalise = |v: &mut Vec<T>| {
        let m = functional.mass(v).sqrt();
        if m > T::zero() {
            v.iter_mut().for_each(|x| *x /= m);
        }
    };
    normalise(f);
    if !(functional.mass(f) > T::zero()) {
        return Err(Error::param("init", "initial profile vanishes on the grid"));
    }
    let mut grad = vec![T::zero(); n];
    let mut dir = vec![T::zero(); n];
    let mut scratch = vec![T::zero(); n];
    let mut trial = vec![T::zero(); n];
    let mut current = functional.log_ratio(f);
    history.push(current.exp());
    let mut step = T::one();
    let mut stalled = 0;
    let tol = T::lit(grid.tol);
    for iter in 0..grid.max_iter {
        let (m, k, _) = functional.gradient(f, &mut grad);
        functional.precondition(m, k, &grad, &mut dir, &mut scratch);
        let slope: T = grad.iter().zip(&dir).map(|(&g, &d)| g * d).sum();
        if !(slope > T::zero()) {
            return Ok(iter);
        }
        // backtracking: accept only non-decreasing ratios
        let mut accepted = None;
        let mut t = (step * T::lit(2.0)).min(T::one());
        while t > T::lit(1e-12) {
            trial.iter_mut().zip(f.iter().zip(&dir)).for_each(|(x, (&v, &d))| *x = v + t * d);
            trial[n - 1] = T::zero();
            let value = functional.log_ratio(&trial);
            if value.is_finite() && value >= current {
                accepted = Some(value);
                break;
            }
            t /= T::lit(2.0);
        }
        let Some(value) = accepted else {
            return Ok(iter);
        };
        step = t;
        std::mem::swap(f, &mut trial);
        normalise(f);
        let gain = value - current;
        current = value;
        history.push(current.exp());
        stalled = if gain < tol { stalled + 1 } else { 0 };
        if stalled >= STALL_STEPS {
            return Ok(iter + 1);
        }
    }
    Err(Error::NonConvergence {
        what: "gn_constant",
        detail: format!("ratio {} after {} iterations", current.exp(), grid.max_iter),
    })
}
