//! Per-replicate statistics from a single pass over each walk.

use crate::error::{Error, Result};
use crate::lattice::{KeyMap, Site, MAX_COORD};
use crate::range::BlockPartition;
use crate::walk::{stream_rng, Walker};

#[derive(Clone, Copy, Debug, Default)]
struct Visit {
    first: u32,
    count: u32,
    /// One plus the index of the last block counted.
    last_block: u32,
    /// Number of blocks whose range contains the site.
    mult: u32,
}

/// Visit records of one walk: first-visit time, local time and block
/// multiplicity for every site in its range.
#[derive(Clone, Debug)]
pub struct WalkSummary {
    visits: KeyMap<Visit>,
    n: usize,
}

impl WalkSummary {
    /// Runs the walk on stream `(seed, replicate, walk_index)` for `n` steps;
    /// the step sequence matches [`Walker::path`] on the same stream.
    pub fn simulate(
        walker: &Walker,
        n: usize,
        blocks: Option<&BlockPartition>,
        seed: u64,
        replicate: u64,
        walk_index: u64,
    ) -> Result<Self> {
        if n >= u32::MAX as usize {
            return Err(Error::param("n", "walk length must fit in 32 bits"));
        }
        let mut rng = stream_rng(seed, replicate, walk_index);
        let check = walker.may_overflow(n);
        let mut visits: KeyMap<Visit> = KeyMap::default();
        visits.reserve(n.min(1 << 20));
        let mut x = Site::ORIGIN;
        for k in 0..=n {
            if k > 0 {
                x = x + walker.sample_step(&mut rng);
                if check && x.norm_inf() > MAX_COORD {
                    return Err(Error::CoordinateOverflow { coord: x.norm_inf() });
                }
            }
            let v = visits.entry(x.key()?).or_insert(Visit {
                first: k as u32,
                ..Visit::default()
            });
            v.count += 1;
            if let Some(b) = blocks {
                let t = b.t_n;
                if let Some(i) = k.checked_div(t) {
                    // time k lies in blocks k/t - 1 (right end) and k/t
                    for block in [i.checked_sub(usize::from(k % t == 0)), Some(i)].into_iter().flatten() {
                        if block < b.a && v.last_block < block as u32 + 1 {
                            v.last_block = block as u32 + 1;
                            v.mult += 1;
                        }
                    }
                }
            }
        }
        Ok(WalkSummary { visits, n })
    }

    pub fn len_steps(&self) -> usize {
        self.n
    }

    pub fn range_size(&self) -> usize {
        self.visits.len()
    }

    /// `Σ_{i<k} #(S(Δ_i) ∩ S(Δ_k))` over the blocks given at simulation.
    pub fn cross_block_sum(&self) -> u64 {
        self.visits
            .values()
            .map(|v| {
                let m = v.mult as u64;
                m * m.saturating_sub(1) / 2
            })
            .sum()
    }
}

/// Intersection statistics of `p` walks for one replicate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicateStats {
    /// `J_n`.
    pub j: u64,
    /// `#(S_1[0, span] ∩ .. ∩ S_p[0, span])`.
    pub j_span: u64,
    /// `I_n = Σ_x Π_j l_j(n, x)`.
    pub i: u128,
    /// `A = Σ_x Π_j (number of blocks of walk j visiting x)`.
    pub a: u128,
}

/// Combines per-walk summaries; `span` bounds the window for `j_span`.
pub fn replicate_stats(walks: &[WalkSummary], span: usize) -> ReplicateStats {
    let mut stats = ReplicateStats {
        j: 0,
        j_span: 0,
        i: 0,
        a: 0,
    };
    let Some(small) = (0..walks.len()).min_by_key(|&j| walks[j].visits.len()) else {
        return stats;
    };
    'site: for (key, v) in &walks[small].visits {
        let (mut latest, mut lt, mut mult) = (v.first, v.count as u128, v.mult as u128);
        for (j, w) in walks.iter().enumerate() {
            if j == small {
                continue;
            }
            let Some(u) = w.visits.get(key) else {
                continue 'site;
            };
            latest = latest.max(u.first);
            lt *= u.count as u128;
            mult *= u.mult as u128;
        }
        stats.j += 1;
        stats.i += lt;
        stats.a += mult;
        if latest as usize <= span {
            stats.j_span += 1;
        }
    }
    stats
}

/// Simulates the `p` walks of one replicate and checks the pathwise
/// relations `1 <= J <= n + 1`, `J <= I` and `J_span <= A`.
pub fn sample_replicate(
    walker: &Walker,
    p: usize,
    n: usize,
    blocks: &BlockPartition,
    seed: u64,
    replicate: u64,
) -> Result<ReplicateStats> {
    let walks = (0..p)
        .map(|j| WalkSummary::simulate(walker, n, Some(blocks), seed, replicate, j as u64))
        .collect::<Result<Vec<_>>>()?;
    let stats = replicate_stats(&walks, blocks.span());
    let violation = |what: &str| Error::InvariantViolation {
        what: format!("{what} (n = {n}, J = {}, I = {}, A = {})", stats.j, stats.i, stats.a),
        seed,
        replicate,
    };
    if stats.j < 1 || stats.j > n as u64 + 1 {
        return Err(violation("1 <= J <= n + 1"));
    }
    if (stats.j as u128) > stats.i {
        return Err(violation("J <= I"));
    }
    if (stats.j_span as u128) > stats.a {
        return Err(violation("J <= A"));
    }
    Ok(stats)
}

/// Stream replicate index for replicate `r` of grid cell `cell`, so that
/// different grid points use disjoint streams.
pub fn cell_replicate(cell: usize, r: usize) -> u64 {
    ((cell as u64) << 32) | r as u64
}
