//! Step distributions on Z^d, reproducible simulation, and exact laws.

mod exact;
mod io;
mod sim;

pub use exact::{
    hitting_prob_dp, pmf_convolution, ConvolutionBudget, HitSweep, HittingLaw, Pmf, PmfSweep,
};
pub use io::{parse_distribution, read_distribution};
pub use sim::{simulate, stream_rng, WalkPath, Walker, RNG_DESCRIPTION};

use crate::error::{Error, Result};
use crate::lattice::{Site, MAX_DIM};
use crate::num::Real;

/// Finite, symmetric law of the increments of a walk on Z^d.
///
/// `atoms` holds the non-zero steps; the zero step carries mass `laziness`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution<T> {
    dim: usize,
    atoms: Vec<(Site, T)>,
    laziness: T,
}

impl<T: Real> StepDistribution<T> {
    /// Validates and builds a distribution. Zero vectors in `atoms` are
    /// folded into the laziness mass; duplicate vectors are merged.
    ///
    /// The non-zero atoms are assumed to generate Z^d as a group; this is
    /// checked for the built-in constructors only.
    pub fn new(dim: usize, atoms: Vec<(Site, T)>, laziness: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        if dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(laziness >= T::zero() && laziness < T::one()) {
            return Err(Error::InvalidDistribution(format!(
                "zero-step mass {laziness} outside [0, 1)"
            )));
        }
        let mut zero = laziness;
        let mut merged: Vec<(Site, T)> = Vec::with_capacity(atoms.len());
        for (v, q) in atoms {
            if v.0[dim..].iter().any(|&c| c != 0) {
                return Err(Error::InvalidDistribution(format!(
                    "atom {:?} has coordinates beyond dimension {dim}",
                    v.0
                )));
            }
            if !(q > T::zero()) || !q.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "atom {:?} has non-positive probability {q}",
                    &v.0[..dim]
                )));
            }
            if v.is_origin() {
                zero += q;
            } else if let Some(slot) = merged.iter_mut().find(|(w, _)| *w == v) {
                slot.1 += q;
            } else {
                merged.push((v, q));
            }
        }
        merged.sort_by_key(|a| a.0);
        let dist = StepDistribution {
            dim,
            atoms: merged,
            laziness: zero,
        };
        dist.validate()?;
        Ok(dist)
    }

    fn validate(&self) -> Result<()> {
        let tol = T::sum_tolerance();
        let total = self.total_mass();
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        if self.laziness >= T::one() {
            return Err(Error::InvalidDistribution("walk never moves".into()));
        }
        if self.atoms.is_empty() {
            return Err(Error::InvalidDistribution("no non-zero steps".into()));
        }
        for &(v, q) in &self.atoms {
            match self.atoms.iter().find(|(w, _)| *w == -v) {
                Some(&(_, q2)) if (q - q2).abs() <= tol => {}
                _ => {
                    return Err(Error::InvalidDistribution(format!(
                        "not symmetric: atom {:?} lacks a matching negative",
                        &v.0[..self.dim]
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Non-zero steps with their probabilities.
    pub fn atoms(&self) -> &[(Site, T)] {
        &self.atoms
    }

    /// Mass on the zero step.
    pub fn laziness(&self) -> T {
        self.laziness
    }

    /// All steps including the zero step when it has positive mass.
    pub fn steps(&self) -> impl Iterator<Item = (Site, T)> + '_ {
        let zero = (self.laziness > T::zero()).then_some((Site::ORIGIN, self.laziness));
        zero.into_iter().chain(self.atoms.iter().copied())
    }

    pub fn total_mass(&self) -> T {
        self.laziness + self.atoms.iter().map(|a| a.1).sum::<T>()
    }

    /// Largest max-norm of a step.
    pub fn max_step(&self) -> i64 {
        self.atoms.iter().map(|(v, _)| v.norm_inf()).max().unwrap_or(0)
    }

    /// Number of distinct steps (zero step included when lazy).
    pub fn support_size(&self) -> usize {
        self.atoms.len() + usize::from(self.laziness > T::zero())
    }

    /// Converts the probabilities to another scalar type.
    pub fn cast<U: Real>(&self) -> StepDistribution<U> {
        StepDistribution {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|&(v, q)| (v, U::lit(q.as_f64())))
                .collect(),
            laziness: U::lit(self.laziness.as_f64()),
        }
    }

    /// Canonical text rendering used for hashing and manifests.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("dim={};laziness={:e}", self.dim, self.laziness.as_f64());
        for (v, q) in &self.atoms {
            s.push_str(&format!(";{:?}:{:e}", &v.0[..self.dim], q.as_f64()));
        }
        s
    }
}

/// Simple random walk: `±e_i` each with probability `1/(2d)`.
pub fn make_simple_walk<T: Real>(d: usize) -> Result<StepDistribution<T>> {
    if d == 0 {
        return Err(Error::param("d", "dimension must be at least 1"));
    }
    if d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let q = T::one() / T::from_usize_lossy(2 * d);
    let atoms = (0..d)
        .flat_map(|i| [(Site::unit(i), q), (-Site::unit(i), q)])
        .collect();
    StepDistribution::new(d, atoms, T::zero())
}

/// Mixes in a zero step with probability `eta`: the result moves according
/// to `base` with probability `1 - eta` and stays put otherwise.
pub fn make_lazy<T: Real>(base: &StepDistribution<T>, eta: T) -> Result<StepDistribution<T>> {
    if !(eta >= T::zero() && eta < T::one()) {
        return Err(Error::param("eta", format!("{eta} outside [0, 1)")));
    }
    let keep = T::one() - eta;
    Ok(StepDistribution {
        dim: base.dim,
        atoms: base.atoms.iter().map(|&(v, q)| (v, q * keep)).collect(),
        laziness: eta + keep * base.laziness,
    })
}

/// Step covariance Γ and its determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covariance<T> {
    pub dim: usize,
    pub matrix: [[T; MAX_DIM]; MAX_DIM],
    pub det: T,
}

impl<T: Real> Covariance<T> {
    pub fn entry(&self, i: usize, j: usize) -> T {
        self.matrix[i][j]
    }
}

/// Γ_ij = Σ q v_i v_j. Fails when Γ is singular, since every rate constant
/// downstream divides by a power of det Γ.
pub fn covariance<T: Real>(dist: &StepDistribution<T>) -> Result<Covariance<T>> {
    let d = dist.dim;
    let mut m = [[T::zero(); MAX_DIM]; MAX_DIM];
    for &(v, q) in &dist.atoms {
        for i in 0..d {
            for j in 0..d {
                m[i][j] += q * T::lit((v.0[i] * v.0[j]) as f64);
            }
        }
    }
    let det = match d {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    };
    if !(det > T::sum_tolerance()) {
        return Err(Error::SingularCovariance { det: det.as_f64() });
    }
    Ok(Covariance { dim: d, matrix: m, det })
}

/// Characteristic function φ(λ) = Σ q cos⟨λ, v⟩, real by symmetry.
pub fn char_fn<T: Real>(dist: &StepDistribution<T>, lambda: &[T]) -> T {
    debug_assert_eq!(lambda.len(), dist.dim);
    let mut phi = dist.laziness;
    for &(v, q) in &dist.atoms {
        let mut dot = T::zero();
        for (l, &c) in lambda.iter().zip(v.0.iter()) {
            dot += *l * T::lit(c as f64);
        }
        phi += q * dot.cos();
    }
    phi
}
