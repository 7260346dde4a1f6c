//! `oracle-suite`: every exact check, printed as a pass/fail table.

use crate::args::OracleArgs;
use crate::manifest::Manifest;
use crate::{CliError, Outcome};
use ril_core::oracles::{
    check_hitting_bound, check_block_moment_inequality, check_range_subadditivity_all, enumerate_paths, enumerated_ei,
    enumerated_ej, exact_ei, exact_ej, ground_state_shooting, EnumerationBudget, MassVisitor, MomentCheckMode,
    OracleCache, EXACT_SLACK,
};
use ril_core::theory::{gamma_escape_integral, gamma_escape_sum, gn_constant, GnGrid};
use ril_core::walk::{make_lazy, make_simple_walk, ConvolutionBudget, StepDistribution};
use ril_core::Result as CoreResult;
use serde_json::json;

struct Check {
    name: String,
    detail: String,
    value: f64,
    pass: bool,
}

fn walks() -> CoreResult<Vec<(&'static str, StepDistribution<f64>)>> {
    let s2 = make_simple_walk::<f64>(2)?;
    let s3 = make_simple_walk::<f64>(3)?;
    Ok(vec![
        ("simple d=2", s2.clone()),
        ("lazy(1/2) d=2", make_lazy(&s2, 0.5)?),
        ("simple d=3", s3.clone()),
        ("lazy(1/2) d=3", make_lazy(&s3, 0.5)?),
    ])
}

pub fn run(a: &OracleArgs) -> Outcome<()> {
    let out = a.common.out.clone().unwrap_or_else(|| "ril-out".into());
    let cache = OracleCache::from_env();
    let mut manifest = Manifest::new(
        out.join("oracle-suite.manifest.json"),
        "oracle-suite",
        json!({ "fast": a.fast, "seed": a.common.seed.unwrap_or(MC_SEED) }),
        None,
    );
    let result_path = out.join("oracle-suite.json");
    manifest.add_output("json", &result_path);
    manifest.write()?;
    let checks = checks(a.fast, a.common.seed.unwrap_or(MC_SEED), &cache).map_err(CliError::from_core)?;

    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let dwidth = checks.iter().map(|c| c.detail.len()).max().unwrap_or(0);
    println!("{:<width$}  {:<dwidth$}  {:>12}  result", "check", "detail", "value");
    for c in &checks {
        println!(
            "{:<width$}  {:<dwidth$}  {:>12.3e}  {}",
            c.name,
            c.detail,
            c.value,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let rows: Vec<_> = checks
        .iter()
        .map(|c| json!({ "check": c.name, "detail": c.detail, "value": c.value, "pass": c.pass }))
        .collect();
    std::fs::write(&result_path, serde_json::to_string_pretty(&rows).expect("serialises") + "\n")?;
    println!("{} checks, {} failed (cache: {})", checks.len(), failed, cache.dir().display());
    if failed > 0 {
        return Err(CliError::failure(format!("{failed} oracle checks failed")));
    }
    Ok(())
}

const MC_SEED: u64 = 20_240_601;

fn cached(cache: &OracleCache, op: &str, params: &str, dist: &StepDistribution<f64>, f: impl FnOnce() -> CoreResult<f64>) -> CoreResult<f64> {
    cache.get_or_compute(op, params, &dist.canonical_string(), 1e-12, f)
}

fn checks(fast: bool, seed: u64, cache: &OracleCache) -> CoreResult<Vec<Check>> {
    let budget = EnumerationBudget::default();
    let mut out = Vec::new();
    let walks = walks()?;

    let lazy2 = &walks[1].1;
    let mass = enumerate_paths(lazy2, 6, budget, MassVisitor::default)?.mass;
    out.push(Check {
        name: "path probabilities".into(),
        detail: "lazy d=2, n=6: |Σ P - 1|".into(),
        value: (mass - 1.0).abs(),
        pass: (mass - 1.0).abs() <= 1e-12,
    });

    let n_max = if fast { 4 } else { 6 };
    for (label, dist) in &walks {
        let (mut worst_j, mut worst_i) = (0.0f64, 0.0f64);
        for n in 0..=n_max {
            for p in [2usize, 3] {
                let params = format!("p={p} n={n}");
                let a = cached(cache, "exact_EJ", &params, dist, || exact_ej(dist, p, n, n as i64))?;
                let b = cached(cache, "enumerated_EJ", &params, dist, || enumerated_ej(dist, p, n, budget))?;
                worst_j = worst_j.max((a - b).abs());
                let a = cached(cache, "exact_EI", &params, dist, || exact_ei(dist, p, n))?;
                let b = cached(cache, "enumerated_EI", &params, dist, || enumerated_ei(dist, p, n, budget))?;
                worst_i = worst_i.max((a - b).abs());
            }
        }
        out.push(Check {
            name: "E J exact = enumeration".into(),
            detail: format!("{label}, n<={n_max}, p=2,3"),
            value: worst_j,
            pass: worst_j <= 1e-10,
        });
        out.push(Check {
            name: "E I exact = enumeration".into(),
            detail: format!("{label}, n<={n_max}, p=2,3"),
            value: worst_i,
            pass: worst_i <= 1e-10,
        });
    }

    let simple2 = &walks[0].1;
    let range = cached(cache, "exact_EJ", "p=1 n=2", simple2, || exact_ej(simple2, 1, 2, 2))?;
    let law = ril_core::oracles::range_size_law(simple2, 2, budget)?;
    let mean: f64 = law.iter().enumerate().map(|(k, q)| k as f64 * q).sum();
    out.push(Check {
        name: "E #S[0,2] = Σ P{T_x<=2}".into(),
        detail: "simple d=2".into(),
        value: (range - mean).abs(),
        pass: (range - mean).abs() <= 1e-12,
    });

    let horizon = if fast { 12 } else { 30 };
    for (label, dist) in &walks {
        let params = format!("n={horizon} radius=5");
        let margin = cached(cache, "hitting_bound_min_margin", &params, dist, || {
            check_hitting_bound(dist, horizon, 5).map(|r| r.min_margin)
        })?;
        out.push(Check {
            name: "hitting >= Green ratio".into(),
            detail: format!("{label}, n<={horizon}, |x|<=5"),
            value: margin,
            pass: margin >= -EXACT_SLACK,
        });
    }

    let n_sub = if fast { 5 } else { 7 };
    for n in 1..=n_sub {
        let margin = cached(cache, "subadditivity_min_margin", &format!("n={n}"), simple2, || {
            Ok(check_range_subadditivity_all(simple2, n, budget)?
                .iter()
                .map(|r| r.margin)
                .fold(f64::INFINITY, f64::min))
        })?;
        out.push(Check {
            name: "range tail subadditivity".into(),
            detail: format!("simple d=2, n={n}, a+b<=n+1"),
            value: margin,
            pass: margin >= -EXACT_SLACK,
        });
    }

    for m in 1..=2 {
        let margin = cached(cache, "block_moment_margin", &format!("p=2 blocks=[2,2] m={m}"), simple2, || {
            check_block_moment_inequality(simple2, 2, &[2, 2], m, MomentCheckMode::Exact, budget).map(|r| r.margin)
        })?;
        out.push(Check {
            name: "block moment inequality (exact)".into(),
            detail: format!("simple d=2, p=2, blocks [2,2], m={m}"),
            value: margin,
            pass: margin >= -1e-10,
        });
    }
    let replicates = if fast { 2_000 } else { 100_000 };
    let mc = check_block_moment_inequality(
        simple2,
        2,
        &[20, 20],
        2,
        MomentCheckMode::MonteCarlo { replicates, seed },
        budget,
    )?;
    out.push(Check {
        name: "block moment inequality (MC, 3σ)".into(),
        detail: format!("simple d=2, p=2, blocks [20,20], m=2, R={replicates}"),
        value: mc.margin / mc.stderr,
        pass: mc.holds,
    });

    let grid = if fast {
        GnGrid {
            intervals: 400,
            ..GnGrid::default()
        }
    } else {
        GnGrid::default()
    };
    let kappa = gn_constant::<f64>(2, 2, &grid)?.kappa;
    let shoot = ground_state_shooting(2, 2)?.kappa;
    out.push(Check {
        name: "κ(2,2) optimiser vs shooting".into(),
        detail: "relative difference".into(),
        value: (kappa / shoot - 1.0).abs(),
        pass: (kappa / shoot - 1.0).abs() <= 5e-3,
    });

    let simple3 = &walks[2].1;
    let series_budget = if fast {
        ConvolutionBudget { max_cells: 121 * 121 * 121 }
    } else {
        ril_core::theory::DEFAULT_SERIES_BUDGET
    };
    let series = gamma_escape_sum(simple3, 10_000, series_budget)?;
    let integral = gamma_escape_integral(simple3, 16)?;
    out.push(Check {
        name: "γ series vs Green integral".into(),
        detail: format!("simple d=3, exact to k={}", series.exact_horizon),
        value: (series.estimate - integral).abs(),
        pass: (series.estimate - integral).abs() <= 1e-3,
    });
    Ok(out)
}
