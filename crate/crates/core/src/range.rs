//! Path statistics: ranges, local times, J_n, I_n, block quantities and
//! first hitting times.
//!
//! All statistics include time zero: the range of `S[lo, hi]` contains
//! `S(lo)`, and local times count visits at times `0..=n`.

use crate::error::{Error, Result};
use crate::lattice::{KeyMap, KeySet, Site};
use crate::walk::WalkPath;

/// Distinct sites visited during a time window.
#[derive(Clone, Debug, Default)]
pub struct SiteSet {
    sites: KeySet,
}

impl SiteSet {
    pub fn count(&self) -> usize {
        self.sites.len()
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.key().map(|k| self.sites.contains(&k)).unwrap_or(false)
    }

    #[inline]
    pub fn contains_key(&self, key: u64) -> bool {
        self.sites.contains(&key)
    }

    pub fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.sites.iter().copied()
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.sites.iter().map(|&k| Site::from_key(k))
    }

    /// Inserts a site, returning true if it was new.
    #[inline]
    pub fn insert_key(&mut self, key: u64) -> bool {
        self.sites.insert(key)
    }
}

/// Visit counts `l(x) = #{k in [lo, hi] : S(k) = x}`.
#[derive(Clone, Debug, Default)]
pub struct LocalTimeMap {
    counts: KeyMap<u64>,
}

impl LocalTimeMap {
    pub fn get(&self, x: &Site) -> u64 {
        x.key()
            .ok()
            .and_then(|k| self.counts.get(&k).copied())
            .unwrap_or(0)
    }

    /// Number of distinct sites (the range size).
    pub fn support(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (Site::from_key(k), c))
    }
}

/// Consecutive blocks `Δ_i = [(i-1)·t_n, i·t_n]`, `i = 1..=a`. Adjacent
/// blocks share one endpoint time; together they cover `[0, a·t_n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub t_n: usize,
    pub a: usize,
}

impl BlockPartition {
    pub fn new(t_n: usize, a: usize) -> Result<Self> {
        if a == 0 {
            return Err(Error::param("a", "need at least one block"));
        }
        Ok(BlockPartition { t_n, a })
    }

    /// `t_n = ⌊n / b_n⌋` and `a = ⌊b_n⌋` blocks.
    pub fn from_scale(n: usize, b_n: f64) -> Result<Self> {
        if !(b_n >= 1.0) {
            return Err(Error::param("b_n", format!("{b_n} must be at least 1")));
        }
        Self::new((n as f64 / b_n).floor() as usize, b_n.floor() as usize)
    }

    /// Last time covered, `a·t_n`.
    pub fn span(&self) -> usize {
        self.a * self.t_n
    }

    /// Time window of block `i` (0-based).
    pub fn block(&self, i: usize) -> (usize, usize) {
        (i * self.t_n, (i + 1) * self.t_n)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.a).map(|i| self.block(i))
    }
}

fn check_window(path: &WalkPath, lo: usize, hi: usize) -> Result<()> {
    if lo > hi || hi > path.len_steps() {
        return Err(Error::param(
            "interval",
            format!("[{lo}, {hi}] outside [0, {}]", path.len_steps()),
        ));
    }
    Ok(())
}

/// Distinct sites of `S[lo, hi]`.
pub fn range_of(path: &WalkPath, lo: usize, hi: usize) -> Result<SiteSet> {
    check_window(path, lo, hi)?;
    let window = &path.positions[lo..=hi];
    let mut sites = KeySet::with_capacity_and_hasher(window.len(), Default::default());
    for x in window {
        sites.insert(x.key()?);
    }
    Ok(SiteSet { sites })
}

/// Visit counts over `S[lo, hi]`.
pub fn local_times(path: &WalkPath, lo: usize, hi: usize) -> Result<LocalTimeMap> {
    check_window(path, lo, hi)?;
    let window = &path.positions[lo..=hi];
    let mut counts = KeyMap::with_capacity_and_hasher(window.len(), Default::default());
    for x in window {
        *counts.entry(x.key()?).or_insert(0) += 1;
    }
    Ok(LocalTimeMap { counts })
}

/// Cardinality of the intersection of several site sets. Probes the
/// smallest set's members against the others.
pub fn intersect_sets(sets: &[SiteSet]) -> u64 {
    let Some((small, _)) = sets.iter().enumerate().min_by_key(|(_, s)| s.count()) else {
        return 0;
    };
    sets[small]
        .keys()
        .filter(|&k| {
            sets.iter()
                .enumerate()
                .all(|(j, s)| j == small || s.contains_key(k))
        })
        .count() as u64
}

fn check_paths(paths: &[WalkPath], n: usize) -> Result<()> {
    if paths.len() < 2 {
        return Err(Error::param("paths", "need at least two walks"));
    }
    if let Some(p) = paths.iter().find(|p| p.len_steps() < n) {
        return Err(Error::param(
            "n",
            format!("path has {} steps, fewer than n = {n}", p.len_steps()),
        ));
    }
    Ok(())
}

/// J_n: number of sites visited by every walk during `[0, n]`.
pub fn intersect_ranges(paths: &[WalkPath], n: usize) -> Result<u64> {
    check_paths(paths, n)?;
    let sets = paths
        .iter()
        .map(|p| range_of(p, 0, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(intersect_sets(&sets))
}

/// I_n = Σ_x Π_j l_j(n, x): the number of time tuples in `[0, n]^p` at
/// which all walks sit on the same site.
pub fn intersection_local_time(paths: &[WalkPath], n: usize) -> Result<u128> {
    check_paths(paths, n)?;
    let maps = paths
        .iter()
        .map(|p| local_times(p, 0, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(local_time_product(&maps))
}

/// Σ_x Π_j l_j(x) over a set of local-time maps.
pub fn local_time_product(maps: &[LocalTimeMap]) -> u128 {
    let Some((small, _)) = maps.iter().enumerate().min_by_key(|(_, m)| m.support()) else {
        return 0;
    };
    let mut total = 0u128;
    'site: for (k, &c) in &maps[small].counts {
        let mut prod = c as u128;
        for (j, m) in maps.iter().enumerate() {
            if j == small {
                continue;
            }
            match m.counts.get(k) {
                Some(&l) => prod *= l as u128,
                None => continue 'site,
            }
        }
        total += prod;
    }
    total
}

/// Per-site count of blocks whose range contains the site.
fn block_multiplicity(path: &WalkPath, intervals: &[(usize, usize)]) -> Result<KeyMap<u32>> {
    let span = intervals.iter().map(|&(_, hi)| hi).max().unwrap_or(0);
    if span > path.len_steps() {
        return Err(Error::param(
            "blocks",
            format!("partition spans {} steps, path has {}", span, path.len_steps()),
        ));
    }
    let mut mult: KeyMap<u32> = KeyMap::default();
    for &(lo, hi) in intervals {
        for key in range_of(path, lo, hi)?.keys() {
            *mult.entry(key).or_insert(0) += 1;
        }
    }
    Ok(mult)
}

/// A = Σ_x Π_j Σ_i 1{x ∈ S_j(Δ_i)}.
pub fn block_quantity_a(paths: &[WalkPath], blocks: &BlockPartition) -> Result<u128> {
    block_quantity_a_intervals(paths, &blocks.blocks().collect::<Vec<_>>())
}

/// [`block_quantity_a`] for arbitrary closed time intervals `[lo, hi]`.
pub fn block_quantity_a_intervals(paths: &[WalkPath], intervals: &[(usize, usize)]) -> Result<u128> {
    if paths.is_empty() {
        return Err(Error::param("paths", "need at least one walk"));
    }
    let mults = paths
        .iter()
        .map(|p| block_multiplicity(p, intervals))
        .collect::<Result<Vec<_>>>()?;
    let (small, _) = mults
        .iter()
        .enumerate()
        .min_by_key(|(_, m)| m.len())
        .expect("non-empty");
    let mut total = 0u128;
    'site: for (k, &c) in &mults[small] {
        let mut prod = c as u128;
        for (j, m) in mults.iter().enumerate() {
            if j == small {
                continue;
            }
            match m.get(k) {
                Some(&l) => prod *= l as u128,
                None => continue 'site,
            }
        }
        total += prod;
    }
    Ok(total)
}

/// Σ_{i<k} #{S(Δ_i) ∩ S(Δ_k)} for a single walk.
pub fn cross_block_intersections(path: &WalkPath, blocks: &BlockPartition) -> Result<u64> {
    let mult = block_multiplicity(path, &blocks.blocks().collect::<Vec<_>>())?;
    Ok(mult
        .values()
        .map(|&c| {
            let c = c as u64;
            c * c.saturating_sub(1) / 2
        })
        .sum())
}

/// T_x = min{k : S(k) = x}.
pub fn first_hitting_time(path: &WalkPath, x: &Site) -> Option<usize> {
    path.positions.iter().position(|p| p == x)
}

/// Running J_k for walks advanced in lockstep.
///
/// Each call to [`IntersectionTracker::push`] appends one position per walk
/// and updates the count of sites common to all ranges in O(p) probes.
#[derive(Clone, Debug)]
pub struct IntersectionTracker {
    ranges: Vec<SiteSet>,
    common: u64,
}

impl IntersectionTracker {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::param("p", "need at least two walks"));
        }
        let mut t = IntersectionTracker {
            ranges: vec![SiteSet::default(); p],
            common: 0,
        };
        let origin = vec![Site::ORIGIN; p];
        t.push(&origin)?;
        Ok(t)
    }

    /// Current J.
    pub fn count(&self) -> u64 {
        self.common
    }

    pub fn range_size(&self, j: usize) -> usize {
        self.ranges[j].count()
    }

    pub fn push(&mut self, positions: &[Site]) -> Result<()> {
        debug_assert_eq!(positions.len(), self.ranges.len());
        for (j, x) in positions.iter().enumerate() {
            let key = x.key()?;
            if self.ranges[j].insert_key(key)
                && self
                    .ranges
                    .iter()
                    .enumerate()
                    .all(|(i, r)| i == j || r.contains_key(key))
            {
                self.common += 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{make_lazy, make_simple_walk, simulate};
    use std::collections::BTreeSet;

    fn still(n: usize) -> WalkPath {
        WalkPath::from_positions(2, vec![Site::ORIGIN; n + 1]).unwrap()
    }

    fn path(points: &[[i64; 2]]) -> WalkPath {
        WalkPath::from_positions(2, points.iter().map(|p| Site([p[0], p[1], 0])).collect()).unwrap()
    }

    fn naive_range(p: &WalkPath, lo: usize, hi: usize) -> BTreeSet<Site> {
        p.positions[lo..=hi].iter().copied().collect()
    }

    #[test]
    fn range_examples() {
        let p0 = still(0);
        assert_eq!(range_of(&p0, 0, 0).unwrap().count(), 1);
        assert_eq!(range_of(&still(5), 0, 5).unwrap().count(), 1);
        assert!(range_of(&still(5), 2, 6).is_err());
        assert!(range_of(&still(5), 3, 2).is_err());
        let d = make_lazy(&make_simple_walk::<f64>(2).unwrap(), 0.25).unwrap();
        for seed in 0..20 {
            let p = simulate(&d, 200, seed, 0).unwrap();
            let r = range_of(&p, 17, 150).unwrap();
            let naive = naive_range(&p, 17, 150);
            assert_eq!(r.count(), naive.len());
            assert!(naive.iter().all(|x| r.contains(x)));
        }
    }

    #[test]
    fn j_examples() {
        let a = path(&[[0, 0], [1, 0]]);
        let b = path(&[[0, 0], [0, 1]]);
        assert_eq!(intersect_ranges(&[a.clone(), b.clone()], 0).unwrap(), 1);
        assert_eq!(intersect_ranges(&[a.clone(), b], 1).unwrap(), 1);
        assert!(intersect_ranges(std::slice::from_ref(&a), 1).is_err());
        assert!(intersect_ranges(&[a.clone(), a], 2).is_err());
    }

    #[test]
    fn j_matches_naive_intersection() {
        let d = make_simple_walk::<f64>(2).unwrap();
        for seed in 0..25 {
            let paths: Vec<_> = (0..3).map(|j| simulate(&d, 50, seed, j).unwrap()).collect();
            let mut common = naive_range(&paths[0], 0, 50);
            for p in &paths[1..] {
                let r = naive_range(p, 0, 50);
                common = common.intersection(&r).copied().collect();
            }
            assert_eq!(intersect_ranges(&paths, 50).unwrap(), common.len() as u64);
        }
    }

    #[test]
    fn i_examples() {
        assert_eq!(intersection_local_time(&[still(0), still(0)], 0).unwrap(), 1);
        assert_eq!(intersection_local_time(&[still(2), still(2)], 2).unwrap(), 9);
        let d = make_simple_walk::<f64>(2).unwrap();
        for seed in 0..25 {
            let a = simulate(&d, 6, seed, 0).unwrap();
            let b = simulate(&d, 6, seed, 1).unwrap();
            let mut tuples = 0u128;
            for k1 in 0..=6 {
                for k2 in 0..=6 {
                    tuples += u128::from(a.positions[k1] == b.positions[k2]);
                }
            }
            assert_eq!(intersection_local_time(&[a, b], 6).unwrap(), tuples);
        }
    }

    #[test]
    fn local_times_sum_to_window_length() {
        let d = make_lazy(&make_simple_walk::<f64>(3).unwrap(), 0.5).unwrap();
        let p = simulate(&d, 300, 9, 0).unwrap();
        let lt = local_times(&p, 0, 300).unwrap();
        assert_eq!(lt.total(), 301);
        assert_eq!(lt.support(), range_of(&p, 0, 300).unwrap().count());
        assert!(lt.get(&Site::ORIGIN) >= 1);
    }

    #[test]
    fn block_examples() {
        let d = make_simple_walk::<f64>(2).unwrap();
        let a = simulate(&d, 40, 5, 0).unwrap();
        let b = simulate(&d, 40, 5, 1).unwrap();
        let one = BlockPartition::new(30, 1).unwrap();
        assert_eq!(
            block_quantity_a(&[a.clone(), b.clone()], &one).unwrap(),
            intersect_ranges(&[a.clone(), b.clone()], 30).unwrap() as u128
        );
        let three = BlockPartition::new(4, 3).unwrap();
        assert_eq!(block_quantity_a(&[still(12), still(12)], &three).unwrap(), 9);
        assert_eq!(cross_block_intersections(&a, &one).unwrap(), 0);
        assert_eq!(
            cross_block_intersections(&still(8), &BlockPartition::new(2, 4).unwrap()).unwrap(),
            6
        );
        assert!(block_quantity_a(&[a.clone(), b], &BlockPartition::new(20, 3).unwrap()).is_err());
        assert_eq!(BlockPartition::from_scale(100, 3.7).unwrap(), BlockPartition { t_n: 27, a: 3 });
    }

    #[test]
    fn block_quantities_match_brute_force() {
        let d = make_lazy(&make_simple_walk::<f64>(2).unwrap(), 0.25).unwrap();
        let blocks = BlockPartition::new(10, 2).unwrap();
        for seed in 0..25 {
            let paths: Vec<_> = (0..2).map(|j| simulate(&d, 20, seed, j).unwrap()).collect();
            let block_sets: Vec<Vec<BTreeSet<Site>>> = paths
                .iter()
                .map(|p| blocks.blocks().map(|(lo, hi)| naive_range(p, lo, hi)).collect())
                .collect();
            let union: BTreeSet<Site> = block_sets.iter().flatten().flatten().copied().collect();
            let mut a = 0u128;
            for x in &union {
                let mut prod = 1u128;
                for sets in &block_sets {
                    prod *= sets.iter().filter(|s| s.contains(x)).count() as u128;
                }
                a += prod;
            }
            assert_eq!(block_quantity_a(&paths, &blocks).unwrap(), a);
            assert!(a >= intersect_ranges(&paths, blocks.span()).unwrap() as u128);
        }
        let three = BlockPartition::new(7, 3).unwrap();
        for seed in 0..25 {
            let p = simulate(&d, 21, seed, 0).unwrap();
            let sets: Vec<_> = three.blocks().map(|(lo, hi)| naive_range(&p, lo, hi)).collect();
            let mut expect = 0;
            for i in 0..3 {
                for k in i + 1..3 {
                    expect += sets[i].intersection(&sets[k]).count() as u64;
                }
            }
            assert_eq!(cross_block_intersections(&p, &three).unwrap(), expect);
        }
    }

    #[test]
    fn hitting_time_examples() {
        let d = make_simple_walk::<f64>(2).unwrap();
        let p = simulate(&d, 10, 1, 0).unwrap();
        assert_eq!(first_hitting_time(&p, &Site::ORIGIN), Some(0));
        assert_eq!(first_hitting_time(&p, &Site([11, 0, 0])), None);
        let x = p.positions[7];
        let t = first_hitting_time(&p, &x).unwrap();
        assert!(t <= 7 && p.positions[t] == x);
    }

    #[test]
    fn tracker_matches_batch() {
        let d = make_simple_walk::<f64>(3).unwrap();
        let paths: Vec<_> = (0..2).map(|j| simulate(&d, 400, 11, j).unwrap()).collect();
        let mut t = IntersectionTracker::new(2).unwrap();
        assert_eq!(t.count(), 1);
        for k in 1..=400 {
            t.push(&[paths[0].positions[k], paths[1].positions[k]]).unwrap();
            if k % 50 == 0 {
                assert_eq!(t.count(), intersect_ranges(&paths, k).unwrap());
            }
        }
    }
}
