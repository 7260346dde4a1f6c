use crate::args::{Command, Common, ConstantsArgs, SimulateArgs, StudyArgs, WalkArgs};
use crate::manifest::Manifest;
use crate::settings::{apply_overrides, into_config, load_table, resolve_seed, SeedSource};
use crate::{oracle_suite, CliError, Outcome};
use ril_core::experiments::{
    block_partition_study, check_walk_steps, estimate_moments, estimate_tail, lil_track, with_suffix, ExperimentConfig, ExperimentReport,
};
use ril_core::range::{intersect_ranges, intersection_local_time};
use ril_core::theory::{
    gamma_escape_integral, gamma_escape_sum, gn_constant, legendre_rate, lil_constant, md_rate, GnGrid, PsiSpec,
    RateParams, DEFAULT_SERIES_BUDGET,
};
use ril_core::walk::{covariance, make_lazy, make_simple_walk, read_distribution, StepDistribution, Walker};
use serde_json::json;
use std::path::{Path, PathBuf};

const DEFAULT_OUT: &str = "ril-out";

pub fn run(command: Command) -> Outcome<()> {
    match command {
        Command::Constants(a) => constants(a),
        Command::Moments(a) => study("moments", a),
        Command::Tails(a) => study("tails", a),
        Command::Lil(a) => study("lil", a),
        Command::Blocks(a) => study("blocks", a),
        Command::OracleSuite(a) => {
            init_threads(&a.common)?;
            oracle_suite::run(&a)
        }
        Command::Simulate(a) => simulate(a),
    }
}

fn init_threads(common: &Common) -> Outcome<()> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::config("threads", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::failure(format!("cannot start worker pool: {e}")))?;
    }
    Ok(())
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn report_seed(seed: u64, source: SeedSource) {
    if source == SeedSource::Entropy {
        eprintln!("seed = {seed} (drawn from system entropy)");
    }
}

fn study(name: &str, a: StudyArgs) -> Outcome<()> {
    init_threads(&a.common)?;
    let mut table = load_table(a.config.as_deref(), a.manifest.as_deref())?;
    apply_overrides(&mut table, &a.overrides)?;
    let (seed, source) = resolve_seed(&mut table, a.common.seed)?;
    report_seed(seed, source);
    let explicit_output = table.contains_key("output");
    let mut cfg: ExperimentConfig = into_config(table)?;
    cfg.output = match (&a.common.out, explicit_output) {
        (Some(dir), _) => dir.join(name),
        (None, true) => cfg.output.clone(),
        (None, false) => Path::new(DEFAULT_OUT).join(name),
    };
    let prefix = cfg.output.clone();
    let mut manifest = Manifest::new(
        with_suffix(&prefix, "manifest.json"),
        name,
        serde_json::to_value(&cfg).expect("config serialises"),
        Some((seed, source)),
    );
    let csv = with_suffix(&prefix, "csv");
    let json_path = with_suffix(&prefix, "json");
    manifest.add_output("csv", &csv);
    manifest.add_output("json", &json_path);
    if a.emit_gnuplot {
        manifest.add_output("gnuplot", &with_suffix(&prefix, "gp"));
    }
    manifest.write()?;
    let report = match name {
        "moments" => estimate_moments(&cfg),
        "tails" => estimate_tail(&cfg),
        "lil" => lil_track(&cfg),
        _ => block_partition_study(&cfg),
    }?;
    report.write(&prefix)?;
    if a.emit_gnuplot {
        std::fs::write(with_suffix(&prefix, "gp"), gnuplot_script(&report, &csv))?;
    }
    println!("manifest: {}", manifest.path.display());
    println!("csv: {}", csv.display());
    println!("json: {}", json_path.display());
    Ok(())
}

/// One panel per experiment name: estimate against n with error bars.
fn gnuplot_script(report: &ExperimentReport, csv: &Path) -> String {
    let file = csv.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut names: Vec<&str> = report.rows.iter().map(|r| r.experiment.as_str()).collect();
    names.dedup();
    let mut s = String::new();
    s.push_str("# run from the directory containing the CSV: gnuplot -p <this file>\n");
    s.push_str("set datafile separator ','\nset datafile missing 'NA'\nset logscale x\nset xlabel 'n'\n");
    s.push_str("set key left top\n");
    s.push_str(&format!("set multiplot layout {},1\n", names.len().max(1)));
    for name in &names {
        s.push_str(&format!("set title '{}: {name}'\n", report.study));
        s.push_str(&format!(
            "plot '< grep \"^{name},\" {file}' using 4:7:8 with yerrorbars title '{name}'\n"
        ));
    }
    s.push_str("unset multiplot\n");
    s
}

fn build_walk(w: &WalkArgs) -> Outcome<StepDistribution<f64>> {
    let base = if w.walk == "simple" {
        make_simple_walk(w.d)?
    } else {
        read_distribution(&w.walk).map_err(|e| CliError::config("walk", format!("{}: {e}", w.walk)))?
    };
    if !(0.0..1.0).contains(&w.laziness) {
        return Err(CliError::config("laziness", "must lie in [0, 1)"));
    }
    Ok(if w.laziness > 0.0 { make_lazy(&base, w.laziness)? } else { base })
}

fn constants(a: ConstantsArgs) -> Outcome<()> {
    init_threads(&a.common)?;
    let dist = build_walk(&a.walk)?;
    let out = out_dir(&a.common);
    let mut manifest = Manifest::new(
        out.join("constants.manifest.json"),
        "constants",
        json!({
            "walk": dist.canonical_string(),
            "p": a.p,
            "lambdas": a.lambdas,
            "k": a.k,
            "quad_points": a.quad_points,
            "intervals": a.intervals,
        }),
        None,
    );
    let result_path = out.join("constants.json");
    manifest.add_output("json", &result_path);
    manifest.write()?;

    let d = dist.dim();
    let det = covariance(&dist)?.det;
    let (gamma, series) = if d >= 3 {
        let integral = gamma_escape_integral(&dist, a.quad_points)?;
        let series = gamma_escape_sum(&dist, a.k, DEFAULT_SERIES_BUDGET)?;
        (Some(integral), Some(series))
    } else {
        (None, None)
    };
    let grid = GnGrid {
        intervals: a.intervals,
        ..GnGrid::default()
    };
    let gn = gn_constant::<f64>(d, a.p, &grid)?;
    let params = RateParams::new(d, a.p, det, gamma, gn.kappa)?;
    let psi = PsiSpec::moderate_deviation(params);
    let rates = a
        .lambdas
        .iter()
        .map(|&l| {
            Ok(json!({
                "lambda": l,
                "rate": md_rate(&params, l)?,
                "legendre_rate": legendre_rate(&psi, l)?,
            }))
        })
        .collect::<Result<Vec<_>, ril_core::Error>>()?;
    let body = json!({
        "d": d,
        "p": a.p,
        "detGamma": det,
        "gamma_escape": gamma,
        "kappa": gn.kappa,
        "md_rate": rates,
        "lil_constant": lil_constant(&params)?,
        "method": {
            "walk": dist.canonical_string(),
            "gamma": gamma.map(|_| "inverse lattice Green integral"),
            "quad_points": gamma.map(|_| a.quad_points),
            "K": series.as_ref().map(|s| s.requested_horizon),
            "series_exact_horizon": series.as_ref().map(|s| s.exact_horizon),
            "series_estimate": series.as_ref().map(|s| s.estimate),
            "series_error_bound": series.as_ref().map(|s| s.error_bound),
            "kappa": "radial preconditioned gradient ascent",
            "gn_intervals": gn.intervals,
            "gn_r_min": grid.r_min,
            "gn_r_max": gn.r_max,
            "gn_iterations": gn.iterations,
        },
    });
    let text = serde_json::to_string_pretty(&body).expect("serialises");
    std::fs::write(&result_path, text.clone() + "\n")?;
    println!("{text}");
    Ok(())
}

fn simulate(a: SimulateArgs) -> Outcome<()> {
    init_threads(&a.common)?;
    if a.walks == 0 {
        return Err(CliError::config("walks", "must be positive"));
    }
    let dist = build_walk(&a.walk)?;
    let seed = a.common.seed.unwrap_or_else(|| rand::random::<u64>() >> 1);
    let source = if a.common.seed.is_some() {
        SeedSource::Cli
    } else {
        SeedSource::Entropy
    };
    report_seed(seed, source);
    let out = out_dir(&a.common);
    let csv = out.join("simulate.csv");
    let mut manifest = Manifest::new(
        out.join("simulate.manifest.json"),
        "simulate",
        json!({ "walk": dist.canonical_string(), "n": a.n, "walks": a.walks }),
        Some((seed, source)),
    );
    manifest.add_output("csv", &csv);
    manifest.write()?;
    // every path is held in memory at once
    check_walk_steps(a.n.saturating_mul(a.walks))?;
    let walker = Walker::new(&dist);
    let paths = (0..a.walks)
        .map(|j| walker.path(a.n, seed, 0, j as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let d = dist.dim();
    let mut text = String::from("walk,t");
    for axis in 1..=d {
        text.push_str(&format!(",x{axis}"));
    }
    text.push('\n');
    for (j, path) in paths.iter().enumerate() {
        for (t, x) in path.positions.iter().enumerate() {
            text.push_str(&format!("{j},{t}"));
            for c in &x.0[..d] {
                text.push_str(&format!(",{c}"));
            }
            text.push('\n');
        }
    }
    std::fs::write(&csv, text)?;
    let mut summary = json!({ "n": a.n, "walks": a.walks, "seed": seed, "csv": csv });
    if a.walks >= 2 {
        summary["J"] = json!(intersect_ranges(&paths, a.n)?);
        let i = intersection_local_time(&paths, a.n)?;
        summary["I"] = u64::try_from(i).map_or_else(|_| json!(i.to_string()), |v| json!(v));
    }
    println!("{}", serde_json::to_string_pretty(&summary).expect("serialises"));
    Ok(())
}
