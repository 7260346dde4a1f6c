//! Pilot runs behind the frozen acceptance bands.
//!
//! `cargo run --release -p ril-core --example pilot -- scaling 2 4000`
//! prints the scaled first moments of `J_n` for n = 2^10..2^16;
//! `... -- tails 10000` prints the tail diagnostic grid for d = 3.

use ril_core::experiments::{estimate_moments, estimate_tail, BnRule, ExperimentConfig, WalkSpec};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> ril_core::Result<()> {
    let start = std::time::Instant::now();
    match std::env::args().nth(1).as_deref() {
        Some("scaling") => {
            let config = ExperimentConfig {
                walk: WalkSpec::simple(arg(2, 2), 0.0),
                n: (10..=16).map(|k| 1usize << k).collect(),
                replicates: arg(3, 4000),
                seed: 2024,
                ..ExperimentConfig::default()
            };
            let report = estimate_moments(&config)?;
            let scaled: Vec<f64> = report.rows_named("moments_J_scaled").map(|r| r.estimate.unwrap_or(f64::NAN)).collect();
            for (row, s) in report.rows_named("moments_J_scaled").zip(&scaled) {
                println!("n = {:>6}  scaled E J = {s:.4}  (se {:.4})", row.n, row.stderr.unwrap_or(f64::NAN));
            }
            let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
            let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
            println!("drift max/min - 1 = {:.1}%", 100.0 * (hi / lo - 1.0));
        }
        Some("tails") => {
            let mut lambdas: Vec<f64> = (1..=8).map(|i| i as f64 / 20.0).collect();
            lambdas.extend([0.5, 0.6, 20.0]);
            let config = ExperimentConfig {
                walk: WalkSpec::simple(3, 0.0),
                n: vec![10_000],
                b_n: BnRule::Explicit(vec![3.0]),
                lambdas,
                replicates: arg(2, 10_000),
                seed: 7,
                ..ExperimentConfig::default()
            };
            let report = estimate_tail(&config)?;
            for cell in report.details["cells"].as_array().into_iter().flatten() {
                println!(
                    "λ = {:<5} threshold {:>9.1}  count {:>5}  estimable {}",
                    cell["lambda"], cell["threshold"].as_f64().unwrap_or(f64::NAN), cell["count"], cell["estimable"]
                );
            }
            for row in report.rows_named("tail_rate") {
                println!("λ = {:<5} -log(P)/b_n = {:.3}", row.m_or_lambda.unwrap_or(f64::NAN), row.estimate.unwrap_or(f64::NAN));
            }
        }
        _ => eprintln!("usage: pilot scaling <d> <replicates> | pilot tails <replicates>"),
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
