//! Exhaustive path enumeration with exact path probabilities.

use crate::error::{Error, Result};
use crate::lattice::{KeyMap, Site};
use crate::num::Real;
use crate::walk::StepDistribution;
use rayon::prelude::*;

/// Refuses enumerations with more than `max_paths` paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_paths: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { max_paths: 10_000_000 }
    }
}

impl EnumerationBudget {
    /// Number of paths `atoms^n`, or an error if it exceeds the budget.
    pub fn check(&self, atoms: usize, n: usize) -> Result<u64> {
        let paths = (atoms as f64).powi(n as i32);
        if paths > self.max_paths as f64 {
            return Err(Error::EnumerationBudget {
                paths,
                limit: self.max_paths,
            });
        }
        Ok(paths.round() as u64)
    }
}

/// Receives every path of a fixed length together with its probability.
pub trait PathVisitor<T>: Send {
    /// `path[k]` is `S(k)`; `path[0]` is the origin.
    fn visit(&mut self, path: &[Site], prob: T);
    /// Folds in the aggregate of a disjoint set of paths.
    fn merge(&mut self, other: Self)
    where
        Self: Sized;
}

/// Visits every `n`-step path of `dist` (including zero steps of a lazy
/// walk). Work is split over the first step; partial aggregates are merged
/// in a fixed order so results do not depend on scheduling.
pub fn enumerate_paths<T, V, F>(
    dist: &StepDistribution<T>,
    n: usize,
    budget: EnumerationBudget,
    make: F,
) -> Result<V>
where
    T: Real,
    V: PathVisitor<T>,
    F: Fn() -> V + Sync,
{
    let steps: Vec<(Site, T)> = dist.steps().collect();
    budget.check(steps.len(), n)?;
    if n == 0 {
        let mut v = make();
        v.visit(&[Site::ORIGIN], T::one());
        return Ok(v);
    }
    let parts: Vec<V> = steps
        .par_iter()
        .map(|&(first, q)| {
            let mut visitor = make();
            let mut path = Vec::with_capacity(n + 1);
            path.push(Site::ORIGIN);
            path.push(first);
            descend(&steps, n, &mut path, q, &mut visitor);
            visitor
        })
        .collect();
    let mut parts = parts.into_iter();
    let mut acc = parts.next().expect("at least one step");
    for part in parts {
        acc.merge(part);
    }
    Ok(acc)
}

fn descend<T: Real, V: PathVisitor<T>>(steps: &[(Site, T)], n: usize, path: &mut Vec<Site>, prob: T, v: &mut V) {
    if path.len() == n + 1 {
        v.visit(path, prob);
        return;
    }
    let here = *path.last().expect("non-empty");
    for &(step, q) in steps {
        path.push(here + step);
        descend(steps, n, path, prob * q, v);
        path.pop();
    }
}

/// Total probability of all paths.
#[derive(Clone, Debug, Default)]
pub struct MassVisitor<T> {
    pub mass: T,
    pub paths: u64,
}

impl<T: Real> PathVisitor<T> for MassVisitor<T> {
    fn visit(&mut self, _: &[Site], prob: T) {
        self.mass += prob;
        self.paths += 1;
    }

    fn merge(&mut self, other: Self) {
        self.mass += other.mass;
        self.paths += other.paths;
    }
}

/// Law of the range size `#S[0, n]`: entry `k` is `P{#S[0, n] = k}`.
#[derive(Clone, Debug, Default)]
pub struct RangeLawVisitor<T> {
    pub law: Vec<T>,
}

impl<T: Real> PathVisitor<T> for RangeLawVisitor<T> {
    fn visit(&mut self, path: &[Site], prob: T) {
        let size = distinct(path).len();
        if self.law.len() <= size {
            self.law.resize(size + 1, T::zero());
        }
        self.law[size] += prob;
    }

    fn merge(&mut self, other: Self) {
        if self.law.len() < other.law.len() {
            self.law.resize(other.law.len(), T::zero());
        }
        for (a, b) in self.law.iter_mut().zip(other.law) {
            *a += b;
        }
    }
}

fn distinct(path: &[Site]) -> Vec<Site> {
    let mut sites = path.to_vec();
    sites.sort_unstable_by_key(|s| s.0);
    sites.dedup();
    sites
}

/// Exact moments of `N(x) = Σ_i 1{x ∈ S(Δ_i)}` for a list of closed time
/// windows `Δ_i`: first moments `E N(x)` and, when `second` is set, the
/// mixed moments `E N(x) N(y)`.
#[derive(Clone, Debug)]
pub struct WindowCountVisitor<T> {
    windows: Vec<(usize, usize)>,
    second: bool,
    pub first_moments: KeyMap<T>,
    pub second_moments: std::collections::HashMap<(u64, u64), T, crate::lattice::KeyBuildHasher>,
}

impl<T: Real> WindowCountVisitor<T> {
    pub fn new(windows: Vec<(usize, usize)>, second: bool) -> Self {
        WindowCountVisitor {
            windows,
            second,
            first_moments: KeyMap::default(),
            second_moments: Default::default(),
        }
    }
}

impl<T: Real> PathVisitor<T> for WindowCountVisitor<T> {
    fn visit(&mut self, path: &[Site], prob: T) {
        let mut counts: Vec<(u64, u32)> = Vec::new();
        for &(lo, hi) in &self.windows {
            for site in distinct(&path[lo..=hi]) {
                let key = site.key().expect("enumerated paths stay small");
                match counts.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((key, 1)),
                }
            }
        }
        for &(k, c) in &counts {
            *self.first_moments.entry(k).or_insert(T::zero()) += prob * T::from_usize_lossy(c as usize);
        }
        if self.second {
            for &(k1, c1) in &counts {
                for &(k2, c2) in &counts {
                    *self.second_moments.entry((k1, k2)).or_insert(T::zero()) +=
                        prob * T::from_usize_lossy((c1 * c2) as usize);
                }
            }
        }
    }

    fn merge(&mut self, other: Self) {
        for (k, v) in other.first_moments {
            *self.first_moments.entry(k).or_insert(T::zero()) += v;
        }
        for (k, v) in other.second_moments {
            *self.second_moments.entry(k).or_insert(T::zero()) += v;
        }
    }
}

/// Expected local times `E #{k <= n : S(k) = x}`.
#[derive(Clone, Debug, Default)]
pub struct LocalTimeVisitor<T> {
    pub expected: KeyMap<T>,
}

impl<T: Real> PathVisitor<T> for LocalTimeVisitor<T> {
    fn visit(&mut self, path: &[Site], prob: T) {
        for site in path {
            let key = site.key().expect("enumerated paths stay small");
            *self.expected.entry(key).or_insert(T::zero()) += prob;
        }
    }

    fn merge(&mut self, other: Self) {
        for (k, v) in other.expected {
            *self.expected.entry(k).or_insert(T::zero()) += v;
        }
    }
}

/// Law of `#S[0, n]` by enumeration.
pub fn range_size_law<T: Real>(dist: &StepDistribution<T>, n: usize, budget: EnumerationBudget) -> Result<Vec<T>> {
    Ok(enumerate_paths(dist, n, budget, RangeLawVisitor::default)?.law)
}

/// `E[A^m]` for `m ∈ {1, 2}` by enumeration, where
/// `A = Σ_x Π_j Σ_i 1{x ∈ S_j(Δ_i)}` over `p` independent copies and the
/// windows are consecutive blocks of the given lengths. A single block
/// gives `E[J_n^m]`.
pub fn enumerated_block_moment<T: Real>(
    dist: &StepDistribution<T>,
    p: usize,
    block_lengths: &[usize],
    m: usize,
    budget: EnumerationBudget,
) -> Result<T> {
    if block_lengths.is_empty() {
        return Err(Error::param("block_lengths", "need at least one block"));
    }
    let windows = consecutive_windows(block_lengths);
    let n = windows.last().expect("non-empty").1;
    let pi = p as i32;
    match m {
        0 => Ok(T::one()),
        1 => {
            let v = enumerate_paths(dist, n, budget, || WindowCountVisitor::new(windows.clone(), false))?;
            Ok(v.first_moments.values().map(|q| q.powi(pi)).sum())
        }
        2 => {
            let v = enumerate_paths(dist, n, budget, || WindowCountVisitor::new(windows.clone(), true))?;
            Ok(v.second_moments.values().map(|q| q.powi(pi)).sum())
        }
        _ => Err(Error::param("m", "moments above 2 are not supported")),
    }
}

/// `Δ_i = [n_1 + ... + n_{i-1}, n_1 + ... + n_i]`.
pub fn consecutive_windows(block_lengths: &[usize]) -> Vec<(usize, usize)> {
    let mut start = 0;
    block_lengths
        .iter()
        .map(|&len| {
            let w = (start, start + len);
            start += len;
            w
        })
        .collect()
}

/// `E J_n` by enumeration: `Σ_x P{x ∈ S[0, n]}^p`.
pub fn enumerated_ej<T: Real>(dist: &StepDistribution<T>, p: usize, n: usize, budget: EnumerationBudget) -> Result<T> {
    enumerated_block_moment(dist, p, &[n], 1, budget)
}

/// `E I_n` by enumeration: `Σ_x (E l(n, x))^p`.
pub fn enumerated_ei<T: Real>(dist: &StepDistribution<T>, p: usize, n: usize, budget: EnumerationBudget) -> Result<T> {
    let v = enumerate_paths(dist, n, budget, LocalTimeVisitor::default)?;
    Ok(v.expected.values().map(|q| q.powi(p as i32)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{make_lazy, make_simple_walk};

    #[test]
    fn masses_sum_to_one() {
        let d = make_lazy(&make_simple_walk::<f64>(2).unwrap(), 0.3).unwrap();
        let v = enumerate_paths(&d, 6, EnumerationBudget::default(), MassVisitor::default).unwrap();
        assert!((v.mass - 1.0).abs() < 1e-12);
        assert_eq!(v.paths, 5u64.pow(6));
    }

    #[test]
    fn one_step_simple_walk() {
        struct Collect(Vec<(Site, f64)>);
        impl PathVisitor<f64> for Collect {
            fn visit(&mut self, path: &[Site], prob: f64) {
                self.0.push((path[1], prob));
            }
            fn merge(&mut self, other: Self) {
                self.0.extend(other.0);
            }
        }
        let d = make_simple_walk::<f64>(2).unwrap();
        let v = enumerate_paths(&d, 1, EnumerationBudget::default(), || Collect(Vec::new())).unwrap();
        assert_eq!(v.0.len(), 4);
        assert!(v.0.iter().all(|&(_, q)| q == 0.25));
    }

    #[test]
    fn budget_refuses() {
        let d = make_simple_walk::<f64>(3).unwrap();
        let err = enumerate_paths(&d, 10, EnumerationBudget::default(), MassVisitor::default).unwrap_err();
        assert!(matches!(err, Error::EnumerationBudget { .. }));
    }

    #[test]
    fn range_law_small() {
        let d = make_simple_walk::<f64>(2).unwrap();
        // two steps: back to origin (prob 1/4) gives range 2, else 3
        let law = range_size_law(&d, 2, EnumerationBudget::default()).unwrap();
        assert!((law[2] - 0.25).abs() < 1e-15 && (law[3] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_length() {
        let d = make_simple_walk::<f64>(2).unwrap();
        assert_eq!(enumerated_ej(&d, 2, 0, EnumerationBudget::default()).unwrap(), 1.0);
        assert_eq!(enumerated_ei(&d, 3, 0, EnumerationBudget::default()).unwrap(), 1.0);
    }
}
