//! End-to-end checks of the `ril` binary: exit codes, manifests, outputs.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn ril(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ril"))
        .current_dir(dir)
        .env("RIL_CACHE_DIR", dir.join("cache"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = "p = 2\nn = [64, 128]\nb_n = 2\nmoments = [1]\nlambdas = [0.5]\nreplicates = 40\nseed = 17\n\n[walk]\nkind = \"simple\"\nd = 2\n";

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = workspace();
    assert_eq!(code(&ril(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&ril(dir.path(), &["moments", "--no-such-flag"])), 2);
}

#[test]
fn missing_config_exits_3() {
    let dir = workspace();
    let out = ril(dir.path(), &["moments", "--config", "missing.toml"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("missing.toml"));
}

#[test]
fn invalid_values_name_the_key() {
    let dir = workspace();
    let out = ril(dir.path(), &["moments", "--config", "small.toml", "--set", "replicates=1"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("replicates"), "{}", stderr(&out));
    let out = ril(dir.path(), &["tails", "--config", "small.toml", "--set", "lambda=2"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("lambda"), "{}", stderr(&out));
    let out = ril(dir.path(), &["blocks", "--config", "small.toml", "--set", "walk.d=7"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn infeasible_budget_exits_4_after_writing_the_manifest() {
    let dir = workspace();
    let out = ril(dir.path(), &["moments", "--config", "small.toml", "--set", "n=[100000000]", "--out", "big"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let manifest = read_json(dir.path().join("big/moments.manifest.json"));
    assert_eq!(manifest["config"]["n"][0], 100_000_000);
    assert!(!dir.path().join("big/moments.csv").exists());
    let out = ril(dir.path(), &["simulate", "--n", "40000000", "--seed", "1", "--out", "sim"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn constants_prints_the_rate_table() {
    let dir = workspace();
    let out = ril(dir.path(), &["constants", "--d", "3", "--p", "2", "--walk", "simple", "--out", "c"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((json["gamma_escape"].as_f64().unwrap() - 0.6594627).abs() < 1e-5);
    assert!((json["kappa"].as_f64().unwrap() - 0.44926).abs() < 1e-3);
    assert_eq!(json["detGamma"].as_f64().unwrap(), 1.0 / 27.0);
    let rates = json["md_rate"].as_array().unwrap();
    assert_eq!(rates.len(), 3);
    for r in rates {
        let (a, b) = (r["rate"].as_f64().unwrap(), r["legendre_rate"].as_f64().unwrap());
        assert!((a / b - 1.0).abs() < 1e-6);
    }
    assert!(json["method"]["K"].is_number());
    assert_eq!(read_json(dir.path().join("c/constants.json")), json);
    assert!(dir.path().join("c/constants.manifest.json").exists());
}

#[test]
fn constants_rejects_unsupported_regime() {
    let dir = workspace();
    let out = ril(dir.path(), &["constants", "--d", "3", "--p", "3", "--out", "c"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn oracle_suite_fast_passes_and_fills_the_cache() {
    let dir = workspace();
    let out = ril(dir.path(), &["oracle-suite", "--fast", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("PASS") && !table.contains("FAIL"));
    let rows = read_json(dir.path().join("o/oracle-suite.json"));
    assert!(rows.as_array().unwrap().iter().all(|r| r["pass"] == true));
    let cached = std::fs::read_dir(dir.path().join("cache")).unwrap().count();
    assert!(cached > 0);
    let again = ril(dir.path(), &["oracle-suite", "--fast", "--out", "o2"]);
    assert_eq!(code(&again), 0);
    assert_eq!(std::fs::read_dir(dir.path().join("cache")).unwrap().count(), cached);
}

#[test]
fn entropy_seed_is_reported_and_replayable() {
    let dir = workspace();
    let out = ril(dir.path(), &["moments", "--config", "small.toml", "--set", "seed=\"\"", "--out", "a"]);
    // an empty seed is not a number
    assert_eq!(code(&out), 3);
    std::fs::write(dir.path().join("noseed.toml"), SMALL.replace("seed = 17\n", "")).unwrap();
    let out = ril(dir.path(), &["moments", "--config", "noseed.toml", "--out", "a"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("entropy"));
    let manifest = read_json(dir.path().join("a/moments.manifest.json"));
    let seed = manifest["config"]["seed"].as_u64().unwrap().to_string();
    let out = ril(dir.path(), &["moments", "--config", "noseed.toml", "--seed", &seed, "--out", "b"]);
    assert_eq!(code(&out), 0);
    let a = std::fs::read(dir.path().join("a/moments.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/moments.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overrides_win_and_manifest_reruns_are_identical() {
    let dir = workspace();
    let out = ril(
        dir.path(),
        &["lil", "--config", "small.toml", "--set", "replicates=25", "--emit-gnuplot", "--out", "x"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = read_json(dir.path().join("x/lil.manifest.json"));
    assert_eq!(manifest["config"]["replicates"], 25);
    assert!(dir.path().join("x/lil.gp").exists());
    let csv = std::fs::read_to_string(dir.path().join("x/lil.csv")).unwrap();
    assert!(csv.starts_with("experiment,d,p,n,m_or_lambda,b_n,estimate,stderr,replicates,seed,walltime_s\n"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(8) == Some("25")));
    let out = ril(dir.path(), &["lil", "--manifest", "x/lil.manifest.json", "--out", "y"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        std::fs::read(dir.path().join("x/lil.csv")).unwrap(),
        std::fs::read(dir.path().join("y/lil.csv")).unwrap()
    );
    let json = read_json(dir.path().join("x/lil.json"));
    assert_eq!(json["schema"], 1);
    assert_eq!(json["config"]["replicates"], 25);
}

#[test]
fn simulate_writes_paths() {
    let dir = workspace();
    let out = ril(dir.path(), &["simulate", "--d", "3", "--n", "50", "--walks", "3", "--seed", "4", "--out", "s"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    let (j, i) = (summary["J"].as_u64().unwrap(), summary["I"].as_u64().unwrap());
    assert!(1 <= j && j <= i);
    let csv = std::fs::read_to_string(dir.path().join("s/simulate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 51);
}

#[test]
fn unreadable_step_file_is_a_config_error() {
    let dir = workspace();
    let out = ril(dir.path(), &["constants", "--walk", "absent.txt"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("absent.txt"));
    let out = ril(
        dir.path(),
        &["moments", "--config", "small.toml", "--set", "walk.kind=\"file\"", "--set", "walk.path=\"absent.txt\""],
    );
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("walk.path"), "{}", stderr(&out));
}
