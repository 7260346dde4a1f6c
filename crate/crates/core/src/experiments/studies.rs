//! The four replicated studies.

use super::config::ExperimentConfig;
use super::report::{mean_stderr, quantile, ExperimentReport, ReportRow};
use super::sample::{cell_replicate, sample_replicate, ReplicateStats, WalkSummary};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::range::{BlockPartition, IntersectionTracker};
use crate::theory::{lil_constant, md_rate, resolve_rate_params, GnGrid, RateParams};
use crate::walk::{stream_rng, StepDistribution, Walker};
use rayon::prelude::*;
use serde_json::json;
use std::time::Instant;

/// Cells with fewer exceedances than this are flagged as not estimable.
pub const MIN_TAIL_COUNT: usize = 10;

/// Quantile levels reported by [`lil_track`].
pub const LIL_QUANTILES: [f64; 3] = [0.1, 0.5, 0.9];

/// Smallest checkpoint accepted by [`lil_track`].
pub const MIN_CHECKPOINT: usize = 16;

struct Context {
    dist: StepDistribution<f64>,
    walker: Walker,
    d: usize,
}

fn context(config: &ExperimentConfig) -> Result<Context> {
    config.validate()?;
    config.check_budget()?;
    let dist = config.walk.build()?;
    Ok(Context {
        walker: Walker::new(&dist),
        d: dist.dim(),
        dist,
    })
}

/// Runs `f` for every replicate in parallel and returns results in
/// replicate order; the first failing replicate (by index) wins.
fn replicate_map<R: Send>(replicates: usize, f: impl Fn(usize) -> Result<R> + Sync) -> Result<Vec<R>> {
    let out: Vec<Result<R>> = (0..replicates).into_par_iter().map(&f).collect();
    out.into_iter().collect()
}

#[allow(clippy::too_many_arguments)]
fn row(
    config: &ExperimentConfig,
    d: usize,
    experiment: &str,
    n: usize,
    m_or_lambda: Option<f64>,
    b_n: Option<f64>,
    estimate: f64,
    stderr: Option<f64>,
    walltime: Option<f64>,
) -> ReportRow {
    ReportRow {
        experiment: experiment.into(),
        d,
        p: config.p,
        n,
        m_or_lambda,
        b_n,
        estimate: Some(estimate),
        stderr,
        replicates: config.replicates,
        seed: config.seed,
        walltime_s: walltime,
    }
}

fn walltime(config: &ExperimentConfig, start: Instant) -> Option<f64> {
    config.record_walltime.then(|| start.elapsed().as_secs_f64())
}

/// Block partition used for the pathwise `J <= A` check; `b_n` below one
/// is raised to one (a single block).
fn check_blocks(n: usize, b_n: f64) -> Result<BlockPartition> {
    BlockPartition::from_scale(n, b_n.max(1.0))
}

fn sample_cell(ctx: &Context, config: &ExperimentConfig, cell: usize, n: usize, b_n: f64) -> Result<Vec<ReplicateStats>> {
    let blocks = check_blocks(n, b_n)?;
    replicate_map(config.replicates, |r| {
        sample_replicate(&ctx.walker, config.p, n, &blocks, config.seed, cell_replicate(cell, r))
    })
}

/// Moment normalisation: `(log n)^{pm} / n^m` in d = 2, `n^{-m/2}` in d = 3.
pub fn moment_scale(d: usize, p: usize, n: usize, m: usize) -> f64 {
    let nf = n as f64;
    match d {
        2 => nf.ln().powi((p * m) as i32) / nf.powi(m as i32),
        3 => nf.powf(-(m as f64) / 2.0),
        _ => f64::NAN,
    }
}

/// Replicated estimates of `E J_n^m` and `E I_n^m` with the scaled `J`
/// moments. Rows: `moments_J`, `moments_J_scaled`, `moments_I`.
pub fn estimate_moments(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let ctx = context(config)?;
    let mut report = ExperimentReport::new("moments", config);
    for (cell, (n, b_n)) in config.scales().into_iter().enumerate() {
        let start = Instant::now();
        let stats = sample_cell(&ctx, config, cell, n, b_n)?;
        let wall = walltime(config, start);
        for &m in &config.moments {
            let js: Vec<f64> = stats.iter().map(|s| (s.j as f64).powi(m as i32)).collect();
            let is: Vec<f64> = stats.iter().map(|s| (s.i as f64).powi(m as i32)).collect();
            let (jm, jse) = if m == 0 { (1.0, 0.0) } else { mean_stderr(&js) };
            let (im, ise) = if m == 0 { (1.0, 0.0) } else { mean_stderr(&is) };
            let scale = if m == 0 { 1.0 } else { moment_scale(ctx.d, config.p, n, m) };
            let mf = Some(m as f64);
            report.rows.push(row(config, ctx.d, "moments_J", n, mf, None, jm, Some(jse), wall));
            report
                .rows
                .push(row(config, ctx.d, "moments_J_scaled", n, mf, None, jm * scale, Some(jse * scale), wall));
            report.rows.push(row(config, ctx.d, "moments_I", n, mf, None, im, Some(ise), wall));
        }
    }
    report.details = json!({ "walk": ctx.dist.canonical_string() });
    Ok(report)
}

/// Tail threshold for multiplier `λ`: `λ n b_n^{p-1} / (log n)^p` in d = 2,
/// `λ √(n b_n^3)` in d = 3.
pub fn tail_threshold(d: usize, p: usize, n: usize, b_n: f64, lambda: f64) -> f64 {
    let nf = n as f64;
    match d {
        2 => lambda * nf * b_n.powi(p as i32 - 1) / nf.ln().powi(p as i32),
        _ => lambda * (nf * b_n.powi(3)).sqrt(),
    }
}

/// Theory parameters for the walk, if the `(d, p)` regime is covered.
fn theory(ctx: &Context, p: usize) -> Option<RateParams<f64>> {
    match resolve_rate_params(&ctx.dist, p, &GnGrid::default()) {
        Ok(r) => Some(r.params),
        Err(e) => {
            log::info!("no closed-form constants for this walk: {e}");
            None
        }
    }
}

/// Empirical `P{J_n >= threshold(λ)}` and the decay diagnostic
/// `-(1/b_n) log P̂` next to the closed-form rate. Rows: `tail_prob`,
/// `tail_rate` (NA when the count is zero), `tail_theory`.
pub fn estimate_tail(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let ctx = context(config)?;
    let params = theory(&ctx, config.p);
    let mut report = ExperimentReport::new("tails", config);
    let mut cells = Vec::new();
    let r = config.replicates as f64;
    for (cell, (n, b_n)) in config.scales().into_iter().enumerate() {
        let start = Instant::now();
        let stats = sample_cell(&ctx, config, cell, n, b_n)?;
        let wall = walltime(config, start);
        for &lambda in &config.lambdas {
            let threshold = tail_threshold(ctx.d, config.p, n, b_n, lambda);
            let count = stats.iter().filter(|s| s.j as f64 >= threshold).count();
            let prob = count as f64 / r;
            let se = (prob * (1.0 - prob) / r).sqrt();
            let (diag, diag_se) = if count > 0 {
                (prob.recip().ln() / b_n, se / (prob * b_n))
            } else {
                (f64::NAN, f64::NAN)
            };
            let rate = params.as_ref().and_then(|p| md_rate(p, lambda).ok());
            let l = Some(lambda);
            report.rows.push(row(config, ctx.d, "tail_prob", n, l, Some(b_n), prob, Some(se), wall));
            report.rows.push(row(config, ctx.d, "tail_rate", n, l, Some(b_n), diag, Some(diag_se), wall));
            report
                .rows
                .push(row(config, ctx.d, "tail_theory", n, l, Some(b_n), rate.unwrap_or(f64::NAN), None, wall));
            cells.push(json!({
                "n": n,
                "b_n": b_n,
                "lambda": lambda,
                "threshold": threshold,
                "count": count,
                "estimable": count >= MIN_TAIL_COUNT,
                "zero_count": count == 0,
                "md_rate": rate,
            }));
        }
    }
    report.details = json!({ "walk": ctx.dist.canonical_string(), "params": params, "cells": cells });
    Ok(report)
}

/// LIL normalisation of `J_n`: `(log n)^p / (n (log log n)^{p-1})` in d = 2,
/// `1 / √(n (log log n)^3)` in d = 3.
pub fn lil_normalisation(d: usize, p: usize, n: usize) -> f64 {
    let nf = n as f64;
    let ll = nf.ln().ln();
    match d {
        2 => nf.ln().powi(p as i32) / (nf * ll.powi(p as i32 - 1)),
        _ => 1.0 / (nf * ll.powi(3)).sqrt(),
    }
}

/// Running maxima of the normalised `J_{n_k}` at the checkpoints `n`
/// (sorted, each at least 16), per replicate.
pub fn lil_running_max(config: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    let ctx = context(config)?;
    let checkpoints = lil_checkpoints(config)?;
    lil_paths(&ctx, config, &checkpoints)
}

fn lil_checkpoints(config: &ExperimentConfig) -> Result<Vec<usize>> {
    let mut checkpoints = config.n.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints[0] < MIN_CHECKPOINT {
        return Err(Error::param("n", format!("LIL checkpoints must be at least {MIN_CHECKPOINT}")));
    }
    Ok(checkpoints)
}

fn lil_paths(ctx: &Context, config: &ExperimentConfig, checkpoints: &[usize]) -> Result<Vec<Vec<f64>>> {
    let horizon = *checkpoints.last().expect("validated non-empty");
    let p = config.p;
    replicate_map(config.replicates, |r| {
        let mut rngs: Vec<_> = (0..p).map(|j| stream_rng(config.seed, r as u64, j as u64)).collect();
        let mut pos = vec![Site::ORIGIN; p];
        let mut tracker = IntersectionTracker::new(p)?;
        let mut running = f64::NEG_INFINITY;
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        let check = ctx.walker.may_overflow(horizon);
        for k in 1..=horizon {
            for (x, rng) in pos.iter_mut().zip(rngs.iter_mut()) {
                *x = *x + ctx.walker.sample_step(rng);
                if check && x.norm_inf() > crate::lattice::MAX_COORD {
                    return Err(Error::CoordinateOverflow { coord: x.norm_inf() });
                }
            }
            tracker.push(&pos)?;
            if k == checkpoints[next] {
                let j = tracker.count();
                if j < 1 || j > k as u64 + 1 {
                    return Err(Error::InvariantViolation {
                        what: format!("1 <= J <= n + 1 (n = {k}, J = {j})"),
                        seed: config.seed,
                        replicate: r as u64,
                    });
                }
                let value = j as f64 * lil_normalisation(ctx.d, p, k);
                let updated = running.max(value);
                if updated < running {
                    return Err(Error::InvariantViolation {
                        what: "running maximum decreased".into(),
                        seed: config.seed,
                        replicate: r as u64,
                    });
                }
                running = updated;
                out.push(running);
                next += 1;
            }
        }
        Ok(out)
    })
}

/// Cross-replicate quantiles (`lil_quantile`, level in `m_or_lambda`) and
/// mean (`lil_mean`) of the running maximum at each checkpoint; the LIL
/// constant is in the details.
pub fn lil_track(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let ctx = context(config)?;
    let checkpoints = lil_checkpoints(config)?;
    let start = Instant::now();
    let paths = lil_paths(&ctx, config, &checkpoints)?;
    let wall = walltime(config, start);
    let params = theory(&ctx, config.p);
    let constant = params.as_ref().and_then(|p| lil_constant(p).ok());
    let mut report = ExperimentReport::new("lil", config);
    for (k, &n) in checkpoints.iter().enumerate() {
        let mut values: Vec<f64> = paths.iter().map(|v| v[k]).collect();
        let (mean, se) = mean_stderr(&values);
        values.sort_by(f64::total_cmp);
        for q in LIL_QUANTILES {
            report
                .rows
                .push(row(config, ctx.d, "lil_quantile", n, Some(q), None, quantile(&values, q), None, wall));
        }
        report.rows.push(row(config, ctx.d, "lil_mean", n, None, None, mean, Some(se), wall));
    }
    report.details = json!({
        "walk": ctx.dist.canonical_string(),
        "checkpoints": checkpoints,
        "lil_constant": constant,
        "params": params,
    });
    Ok(report)
}

/// Cross-block threshold: `ε n / log n` in d = 2, `ε n` in d = 3.
pub fn block_threshold(d: usize, n: usize, epsilon: f64) -> f64 {
    let nf = n as f64;
    match d {
        3 => epsilon * nf,
        _ => epsilon * nf / nf.ln(),
    }
}

/// Distribution of the cross-block intersection sum of a single walk.
/// Rows: `blocks_sum`, `blocks_ratio` (sum over threshold) and
/// `blocks_exceed` (fraction above threshold), with `ε` in `m_or_lambda`.
pub fn block_partition_study(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let ctx = context(config)?;
    let mut report = ExperimentReport::new("blocks", config);
    let mut cells = Vec::new();
    for (cell, (n, b_n)) in config.scales().into_iter().enumerate() {
        let start = Instant::now();
        let blocks = BlockPartition::from_scale(n, b_n)?;
        let sums = replicate_map(config.replicates, |r| {
            let w = WalkSummary::simulate(&ctx.walker, n, Some(&blocks), config.seed, cell_replicate(cell, r), 0)?;
            Ok(w.cross_block_sum() as f64)
        })?;
        let wall = walltime(config, start);
        let threshold = block_threshold(ctx.d, n, config.epsilon);
        let ratios: Vec<f64> = sums.iter().map(|s| s / threshold).collect();
        let exceed = sums.iter().filter(|&&s| s >= threshold).count() as f64 / config.replicates as f64;
        let exceed_se = (exceed * (1.0 - exceed) / config.replicates as f64).sqrt();
        let (sm, sse) = mean_stderr(&sums);
        let (rm, rse) = mean_stderr(&ratios);
        let eps = Some(config.epsilon);
        let b = Some(b_n);
        report.rows.push(row(config, ctx.d, "blocks_sum", n, eps, b, sm, Some(sse), wall));
        report.rows.push(row(config, ctx.d, "blocks_ratio", n, eps, b, rm, Some(rse), wall));
        report.rows.push(row(config, ctx.d, "blocks_exceed", n, eps, b, exceed, Some(exceed_se), wall));
        cells.push(json!({
            "n": n,
            "b_n": b_n,
            "t_n": blocks.t_n,
            "blocks": blocks.a,
            "threshold": threshold,
            "max_sum": sums.iter().copied().fold(0.0, f64::max),
        }));
    }
    report.details = json!({ "walk": ctx.dist.canonical_string(), "cells": cells });
    Ok(report)
}
