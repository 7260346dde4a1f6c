//! Exact laws by dense dynamic programming on a lattice box.

use super::StepDistribution;
use crate::error::{Error, Result};
use crate::lattice::{Site, MAX_DIM};
use crate::num::Real;

/// Upper bound on the number of cells a dense box may hold.
///
/// The default of 2^26 cells keeps a pair of `f64` boxes near 1 GiB.
/// A d-dimensional convolution power of order k needs
/// `(2·k·max_step + 1)^d` cells, so the default admits k up to 4095 in
/// d = 2 and k up to 202 in d = 3 for unit steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvolutionBudget {
    pub max_cells: u128,
}

impl Default for ConvolutionBudget {
    fn default() -> Self {
        ConvolutionBudget { max_cells: 1 << 26 }
    }
}

impl ConvolutionBudget {
    pub fn check(&self, dim: usize, radius: i64) -> Result<()> {
        let cells = box_cells(dim, radius);
        if cells > self.max_cells {
            return Err(Error::MemoryBudget {
                requested: cells,
                limit: self.max_cells,
            });
        }
        Ok(())
    }

    /// Largest radius whose box fits the budget.
    pub fn max_radius(&self, dim: usize) -> i64 {
        let mut r = 0i64;
        while box_cells(dim, r + 1) <= self.max_cells {
            r += 1;
        }
        r
    }
}

fn box_cells(dim: usize, radius: i64) -> u128 {
    ((2 * radius + 1) as u128).pow(dim as u32)
}

/// Dense cube `[-radius, radius]^dim`, row-major with axis 0 slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Grid {
    dim: usize,
    radius: i64,
    side: usize,
    strides: [usize; MAX_DIM],
    len: usize,
}

impl Grid {
    fn new(dim: usize, radius: i64) -> Self {
        let side = (2 * radius + 1) as usize;
        let mut strides = [0; MAX_DIM];
        let mut s = 1;
        for axis in (0..dim).rev() {
            strides[axis] = s;
            s *= side;
        }
        Grid {
            dim,
            radius,
            side,
            strides,
            len: s,
        }
    }

    #[inline]
    fn contains(&self, x: &Site) -> bool {
        x.0[..self.dim].iter().all(|c| c.abs() <= self.radius)
    }

    #[inline]
    fn index(&self, x: &Site) -> usize {
        let mut i = 0;
        for axis in 0..self.dim {
            i += (x.0[axis] + self.radius) as usize * self.strides[axis];
        }
        i
    }

    fn site(&self, mut index: usize) -> Site {
        let mut c = [0; MAX_DIM];
        for axis in 0..self.dim {
            let q = index / self.strides[axis];
            index -= q * self.strides[axis];
            c[axis] = q as i64 - self.radius;
        }
        Site(c)
    }

    /// Signed index displacement of a lattice vector.
    #[inline]
    fn offset(&self, v: &Site) -> isize {
        (0..self.dim)
            .map(|a| v.0[a] as isize * self.strides[a] as isize)
            .sum()
    }
}

/// Exact law of S(k) on its support box.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<T> {
    grid: Grid,
    steps: usize,
    data: Vec<T>,
}

impl<T: Real> Pmf<T> {
    fn delta(dim: usize) -> Self {
        Pmf {
            grid: Grid::new(dim, 0),
            steps: 0,
            data: vec![T::one()],
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn radius(&self) -> i64 {
        self.grid.radius
    }

    /// Number of convolution steps k.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, x: &Site) -> T {
        if self.grid.contains(x) {
            self.data[self.grid.index(x)]
        } else {
            T::zero()
        }
    }

    pub fn at_origin(&self) -> T {
        self.data[self.grid.index(&Site::ORIGIN)]
    }

    pub fn total(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Sites with positive probability.
    pub fn iter(&self) -> impl Iterator<Item = (Site, T)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &q)| q > T::zero())
            .map(|(i, &q)| (self.grid.site(i), q))
    }

    /// Raw cells with their sites, zeros included.
    pub fn cells(&self) -> impl Iterator<Item = (Site, T)> + '_ {
        self.data.iter().enumerate().map(|(i, &q)| (self.grid.site(i), q))
    }
}

/// Successive convolution powers S(0), S(1), ... of one distribution.
pub struct PmfSweep<'a, T> {
    dist: &'a StepDistribution<T>,
    budget: ConvolutionBudget,
    current: Pmf<T>,
    scratch: Vec<T>,
}

impl<'a, T: Real> PmfSweep<'a, T> {
    pub fn new(dist: &'a StepDistribution<T>, budget: ConvolutionBudget) -> Self {
        PmfSweep {
            dist,
            budget,
            current: Pmf::delta(dist.dim()),
            scratch: Vec::new(),
        }
    }

    pub fn current(&self) -> &Pmf<T> {
        &self.current
    }

    /// Convolves once more with the step law.
    pub fn advance(&mut self) -> Result<&Pmf<T>> {
        let s = self.dist.max_step();
        let src = self.current.grid;
        let dst = Grid::new(src.dim, src.radius + s);
        self.budget.check(dst.dim, dst.radius)?;
        let steps: Vec<(isize, T)> = self.dist.steps().map(|(v, q)| (dst.offset(&v), q)).collect();
        self.scratch.clear();
        self.scratch.resize(dst.len, T::zero());
        for (i, &mass) in self.current.data.iter().enumerate() {
            if mass == T::zero() {
                continue;
            }
            let base = dst.index(&src.site(i)) as isize;
            for &(off, q) in &steps {
                self.scratch[(base + off) as usize] += mass * q;
            }
        }
        std::mem::swap(&mut self.current.data, &mut self.scratch);
        self.current.grid = dst;
        self.current.steps += 1;
        Ok(&self.current)
    }
}

/// Exact law of S(k) by k-fold discrete convolution; no truncation.
pub fn pmf_convolution<T: Real>(
    dist: &StepDistribution<T>,
    k: usize,
    budget: ConvolutionBudget,
) -> Result<Pmf<T>> {
    budget.check(dist.dim(), k as i64 * dist.max_step())?;
    let mut sweep = PmfSweep::new(dist, budget);
    for _ in 0..k {
        sweep.advance()?;
    }
    Ok(sweep.current)
}

/// Joint hitting law of at most two target sites by time `n`.
///
/// `pattern(mask)` is `P{T_x <= n for x in A, T_y > n for y not in A}`
/// where bit `i` of `mask` selects `targets[i]` into `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingLaw<T> {
    pub targets: Vec<Site>,
    pub n: usize,
    patterns: Vec<T>,
    pub leaked: f64,
}

impl<T: Real> HittingLaw<T> {
    pub fn pattern(&self, mask: usize) -> T {
        self.patterns[mask]
    }

    /// Marginal `P{T_{targets[i]} <= n}`.
    pub fn prob_hit(&self, i: usize) -> T {
        self.patterns
            .iter()
            .enumerate()
            .filter(|(mask, _)| mask & (1 << i) != 0)
            .map(|(_, &q)| q)
            .sum()
    }

    /// Probability that every target is hit by time `n`.
    pub fn prob_hit_all(&self) -> T {
        *self.patterns.last().expect("non-empty pattern table")
    }
}

/// Forward dynamic programming over (position, hit-flags) states.
///
/// `box_radius` must cover every site reachable in `n` steps; any mass that
/// steps outside the box is reported as an error once it exceeds 1e-12.
pub fn hitting_prob_dp<T: Real>(
    dist: &StepDistribution<T>,
    targets: &[Site],
    n: usize,
    box_radius: i64,
) -> Result<HittingLaw<T>> {
    if targets.is_empty() || targets.len() > 2 {
        return Err(Error::param("targets", "between one and two target sites"));
    }
    let dim = dist.dim();
    for t in targets {
        if t.0[dim..].iter().any(|&c| c != 0) {
            return Err(Error::param("targets", "target outside the walk's dimension"));
        }
    }
    let s = dist.max_step();
    // pad so every neighbour of an interior cell has an index
    let grid = Grid::new(dim, box_radius + s);
    ConvolutionBudget::default().check(dim, grid.radius)?;
    let flags = 1usize << targets.len();
    let mut interior = vec![false; grid.len];
    let mut hit_bits = vec![0u8; grid.len];
    for (i, cell) in interior.iter_mut().enumerate() {
        let x = grid.site(i);
        *cell = x.norm_inf() <= box_radius;
        for (b, t) in targets.iter().enumerate() {
            if x == *t {
                hit_bits[i] |= 1 << b;
            }
        }
    }
    let steps: Vec<(isize, T)> = dist.steps().map(|(v, q)| (grid.offset(&v), q)).collect();
    let mut cur = vec![T::zero(); grid.len * flags];
    let mut next = cur.clone();
    let o = grid.index(&Site::ORIGIN);
    if !grid.contains(&Site::ORIGIN) || box_radius < 0 {
        return Err(Error::param("box_radius", "must be non-negative"));
    }
    cur[o * flags + hit_bits[o] as usize] = T::one();
    let mut leaked = 0.0f64;
    for _ in 0..n {
        next.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..grid.len {
            if !interior[i] {
                continue;
            }
            for f in 0..flags {
                let mass = cur[i * flags + f];
                if mass == T::zero() {
                    continue;
                }
                for &(off, q) in &steps {
                    let j = (i as isize + off) as usize;
                    let m = mass * q;
                    if interior[j] {
                        next[j * flags + (f | hit_bits[j] as usize)] += m;
                    } else {
                        leaked += m.as_f64();
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    if leaked > 1e-12 {
        return Err(Error::BoxTooSmall { leaked });
    }
    let mut patterns = vec![T::zero(); flags];
    for i in 0..grid.len {
        for f in 0..flags {
            patterns[f] += cur[i * flags + f];
        }
    }
    Ok(HittingLaw {
        targets: targets.to_vec(),
        n,
        patterns,
        leaked,
    })
}

/// `P{T_x <= k}` for every site `x` at once, advanced one time step at a
/// time.
///
/// Backward recursion on `h_k(y) = P_y{T_0 <= k}`: `h_0 = 1{y = 0}` and
/// `h_k(y) = 1{y = 0} + 1{y != 0} Σ_v q_v h_{k-1}(y + v)`. Translation
/// invariance gives `P_0{T_x <= k} = h_k(-x)`.
pub struct HitSweep<T> {
    grid: Grid,
    horizon: usize,
    k: usize,
    interior: Vec<usize>,
    steps: Vec<(isize, T)>,
    cur: Vec<T>,
    next: Vec<T>,
    origin: usize,
}

impl<T: Real> HitSweep<T> {
    /// Prepares a sweep valid for every `k <= horizon`.
    pub fn new(dist: &StepDistribution<T>, horizon: usize, budget: ConvolutionBudget) -> Result<Self> {
        let s = dist.max_step();
        let reach = horizon as i64 * s;
        budget.check(dist.dim(), reach + s)?;
        let grid = Grid::new(dist.dim(), reach + s);
        let interior: Vec<usize> = (0..grid.len)
            .filter(|&i| grid.site(i).norm_inf() <= reach)
            .collect();
        let steps = dist.steps().map(|(v, q)| (grid.offset(&v), q)).collect();
        let origin = grid.index(&Site::ORIGIN);
        let mut cur = vec![T::zero(); grid.len];
        cur[origin] = T::one();
        Ok(HitSweep {
            grid,
            horizon,
            k: 0,
            interior,
            steps,
            next: cur.clone(),
            cur,
            origin,
        })
    }

    pub fn time(&self) -> usize {
        self.k
    }

    pub fn advance(&mut self) -> Result<()> {
        if self.k >= self.horizon {
            return Err(Error::param("horizon", "sweep advanced past its horizon"));
        }
        for &i in &self.interior {
            let v = if i == self.origin {
                T::one()
            } else {
                let mut acc = T::zero();
                for &(off, q) in &self.steps {
                    acc += q * self.cur[(i as isize + off) as usize];
                }
                acc
            };
            self.next[i] = v;
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        self.k += 1;
        Ok(())
    }

    /// `P_0{T_x <= k}` at the current time `k`.
    pub fn prob_hit(&self, x: &Site) -> T {
        let y = -*x;
        if self.grid.contains(&y) {
            self.cur[self.grid.index(&y)]
        } else {
            T::zero()
        }
    }

    /// All sites with positive hitting probability at the current time.
    pub fn iter(&self) -> impl Iterator<Item = (Site, T)> + '_ {
        self.interior.iter().filter_map(move |&i| {
            let q = self.cur[i];
            (q > T::zero()).then(|| (-self.grid.site(i), q))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{make_lazy, make_simple_walk};
    use approx::assert_abs_diff_eq;

    fn simple2() -> StepDistribution<f64> {
        make_simple_walk(2).unwrap()
    }

    /// All `atoms^k` step sequences, brute force.
    fn enumerate_endpoints(dist: &StepDistribution<f64>, k: usize) -> Vec<(Site, f64)> {
        let steps: Vec<_> = dist.steps().collect();
        let mut out = vec![(Site::ORIGIN, 1.0)];
        for _ in 0..k {
            out = out
                .iter()
                .flat_map(|&(x, p)| steps.iter().map(move |&(v, q)| (x + v, p * q)))
                .collect();
        }
        out
    }

    #[test]
    fn pmf_small_cases() {
        let d = simple2();
        let p0 = pmf_convolution(&d, 0, ConvolutionBudget::default()).unwrap();
        assert_eq!(p0.get(&Site::ORIGIN), 1.0);
        assert_eq!(p0.iter().count(), 1);
        let p1 = pmf_convolution(&d, 1, ConvolutionBudget::default()).unwrap();
        assert_eq!(p1.iter().count(), 4);
        for i in 0..2 {
            assert_eq!(p1.get(&Site::unit(i)), 0.25);
            assert_eq!(p1.get(&-Site::unit(i)), 0.25);
        }
        let p2 = pmf_convolution(&d, 2, ConvolutionBudget::default()).unwrap();
        // 16 two-step paths, 4 return to the origin
        let returns: f64 = enumerate_endpoints(&d, 2)
            .iter()
            .filter(|(x, _)| x.is_origin())
            .map(|(_, p)| p)
            .sum();
        assert_eq!(returns, 0.25);
        assert_eq!(p2.at_origin(), 0.25);
    }

    #[test]
    fn pmf_matches_enumeration_and_sums_to_one() {
        let d = make_lazy(&make_simple_walk(3).unwrap(), 0.3).unwrap();
        let enumerated = enumerate_endpoints(&d, 5);
        let pmf = pmf_convolution(&d, 5, ConvolutionBudget::default()).unwrap();
        let mut by_site = std::collections::BTreeMap::new();
        for (x, p) in enumerated {
            *by_site.entry(x).or_insert(0.0) += p;
        }
        for (x, p) in &by_site {
            assert_abs_diff_eq!(pmf.get(x), *p, epsilon = 1e-15);
        }
        assert_eq!(pmf.iter().count(), by_site.len());
        let mut sweep = PmfSweep::new(&d, ConvolutionBudget::default());
        for _ in 0..20 {
            let total = sweep.advance().unwrap().total();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn pmf_budget_enforced() {
        let d = make_simple_walk::<f64>(3).unwrap();
        let tiny = ConvolutionBudget { max_cells: 1000 };
        assert!(matches!(
            pmf_convolution(&d, 10, tiny),
            Err(Error::MemoryBudget { .. })
        ));
        assert_eq!(ConvolutionBudget::default().max_radius(3), 202);
    }

    #[test]
    fn hitting_examples() {
        let d = simple2();
        for n in [0, 1, 5] {
            let law = hitting_prob_dp(&d, &[Site::ORIGIN], n, n as i64).unwrap();
            assert_eq!(law.prob_hit(0), 1.0);
        }
        let lazy = make_lazy(&d, 0.5).unwrap();
        let law = hitting_prob_dp(&lazy, &[Site::unit(0)], 1, 1).unwrap();
        assert_eq!(law.prob_hit(0), 0.125);
        let diag = Site([1, 1, 0]);
        let law = hitting_prob_dp(&d, &[diag], 2, 2).unwrap();
        // 2 of the 16 two-step paths pass through (1, 1)
        assert_eq!(law.prob_hit(0), 2.0 / 16.0);
    }

    #[test]
    fn hitting_box_too_small() {
        let d = simple2();
        assert!(matches!(
            hitting_prob_dp(&d, &[Site::unit(0)], 4, 2),
            Err(Error::BoxTooSmall { .. })
        ));
        assert!(hitting_prob_dp(&d, &[Site::unit(0), Site::unit(1), -Site::unit(0)], 4, 4).is_err());
    }

    #[test]
    fn pair_patterns_partition_unity() {
        let d = make_lazy(&simple2(), 0.25).unwrap();
        let law = hitting_prob_dp(&d, &[Site::unit(0), Site([1, 1, 0])], 6, 6).unwrap();
        let total: f64 = (0..4).map(|m| law.pattern(m)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        let single = hitting_prob_dp(&d, &[Site([1, 1, 0])], 6, 6).unwrap();
        assert_abs_diff_eq!(law.prob_hit(1), single.prob_hit(0), epsilon = 1e-15);
        assert!(law.prob_hit_all() <= law.prob_hit(0).min(law.prob_hit(1)));
    }

    #[test]
    fn sweep_agrees_with_forward_dp() {
        let d = make_lazy(&make_simple_walk(3).unwrap(), 0.2).unwrap();
        let mut sweep = HitSweep::new(&d, 5, ConvolutionBudget::default()).unwrap();
        for _ in 0..5 {
            sweep.advance().unwrap();
        }
        for x in [Site::ORIGIN, Site([1, 0, 0]), Site([1, -1, 1]), Site([0, 2, -2]), Site([3, 1, 1])] {
            let forward = hitting_prob_dp(&d, &[x], 5, 5).unwrap().prob_hit(0);
            assert_abs_diff_eq!(sweep.prob_hit(&x), forward, epsilon = 1e-15);
        }
        assert_eq!(sweep.prob_hit(&Site([6, 0, 0])), 0.0);
        assert!(sweep.advance().is_err());
    }

    #[test]
    fn renewal_identity() {
        // P{S(k)=x} = Σ_j P{T_x = j} P{S(k-j) = 0}
        let d = simple2();
        let x = Site([1, 1, 0]);
        let horizon = 20;
        let mut hit_by = Vec::new();
        for n in 0..=horizon {
            hit_by.push(hitting_prob_dp(&d, &[x], n, n as i64).unwrap().prob_hit(0));
        }
        let first: Vec<f64> = (0..=horizon)
            .map(|j| if j == 0 { hit_by[0] } else { hit_by[j] - hit_by[j - 1] })
            .collect();
        let mut sweep = PmfSweep::new(&d, ConvolutionBudget::default());
        let mut at_x = vec![sweep.current().get(&x)];
        let mut at_0 = vec![sweep.current().at_origin()];
        for _ in 0..horizon {
            let p = sweep.advance().unwrap();
            at_x.push(p.get(&x));
            at_0.push(p.at_origin());
        }
        for k in 0..=horizon {
            let rhs: f64 = (0..=k).map(|j| first[j] * at_0[k - j]).sum();
            assert_abs_diff_eq!(at_x[k], rhs, epsilon = 1e-12);
        }
    }
}
