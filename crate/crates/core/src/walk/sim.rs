//! Seeded walk simulation.
//!
//! Stream derivation: the generator is ChaCha8 keyed by
//! `seed.to_le_bytes() ++ replicate.to_le_bytes() ++ [0; 16]` with the
//! ChaCha stream id set to `walk_index`. Distinct `(seed, replicate,
//! walk_index)` triples therefore get non-overlapping streams.

use super::StepDistribution;
use crate::error::{Error, Result};
use crate::lattice::{Site, MAX_COORD};
use crate::num::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, WeightedAliasIndex};
use serde::Serialize;

/// Recorded in manifests and reports.
pub const RNG_DESCRIPTION: &str =
    "rand_chacha::ChaCha8Rng; key = seed_le || replicate_le || 0^16, stream = walk_index; steps by Walker alias table";

pub fn stream_rng(seed: u64, replicate: u64, walk_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replicate.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(walk_index);
    rng
}

/// Positions S(0..=n) of one walk together with the stream that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkPath {
    pub dim: usize,
    pub positions: Vec<Site>,
    pub seed: u64,
    pub replicate: u64,
    pub walk_index: u64,
}

impl WalkPath {
    /// Number of steps `n` (positions has length `n + 1`).
    pub fn len_steps(&self) -> usize {
        self.positions.len() - 1
    }

    /// Builds a path from explicit positions (tests and fixtures).
    pub fn from_positions(dim: usize, positions: Vec<Site>) -> Result<Self> {
        if positions.first() != Some(&Site::ORIGIN) {
            return Err(Error::param("positions", "a path must start at the origin"));
        }
        for p in &positions {
            p.key()?;
        }
        Ok(WalkPath {
            dim,
            positions,
            seed: 0,
            replicate: 0,
            walk_index: 0,
        })
    }
}

/// Step sampler built once per distribution and shared across threads.
#[derive(Clone, Debug)]
pub struct Walker {
    dim: usize,
    steps: Vec<Site>,
    table: WeightedAliasIndex<f64>,
    max_step: i64,
}

impl Walker {
    pub fn new<T: Real>(dist: &StepDistribution<T>) -> Self {
        let (steps, weights): (Vec<Site>, Vec<f64>) =
            dist.steps().map(|(v, q)| (v, q.as_f64())).unzip();
        let table = WeightedAliasIndex::new(weights).expect("validated distribution has positive weights");
        Walker {
            dim: dist.dim(),
            steps,
            table,
            max_step: dist.max_step(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Steps in the order used by the alias table.
    pub fn steps(&self) -> &[Site] {
        &self.steps
    }

    /// Index into [`Walker::steps`] of the next increment.
    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.table.sample(rng)
    }

    #[inline]
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Site {
        self.steps[self.table.sample(rng)]
    }

    /// True if an `n`-step walk could leave the packable coordinate range.
    pub fn may_overflow(&self, n: usize) -> bool {
        (n as i128) * (self.max_step as i128) > MAX_COORD as i128
    }

    pub fn path(&self, n: usize, seed: u64, replicate: u64, walk_index: u64) -> Result<WalkPath> {
        let mut rng = stream_rng(seed, replicate, walk_index);
        let check = self.may_overflow(n);
        let mut positions = Vec::with_capacity(n + 1);
        let mut x = Site::ORIGIN;
        positions.push(x);
        for _ in 0..n {
            x = x + self.sample_step(&mut rng);
            if check && x.norm_inf() > MAX_COORD {
                return Err(Error::CoordinateOverflow { coord: x.norm_inf() });
            }
            positions.push(x);
        }
        Ok(WalkPath {
            dim: self.dim,
            positions,
            seed,
            replicate,
            walk_index,
        })
    }
}

/// Simulates `n` steps from the origin; bit-identical for a fixed
/// `(seed, walk_index)`. Uses replicate 0 of the stream family.
pub fn simulate<T: Real>(
    dist: &StepDistribution<T>,
    n: usize,
    seed: u64,
    walk_index: u64,
) -> Result<WalkPath> {
    Walker::new(dist).path(n, seed, 0, walk_index)
}
