use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mml(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mml"))
        .args(args)
        .env("MML_CACHE_DIR", cache)
        .output()
        .expect("spawn mml")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn coeffs_and_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cold = mml(dir.path(), &["coeffs", "--n-max", "7"]);
    assert_eq!(cold.status.code(), Some(0), "{}", stderr(&cold));
    let rec = json(&cold);
    assert_eq!(rec["command"], "coeffs");
    assert_eq!(rec["results"]["tau"], serde_json::json!([1, -24, 252, -1472, 4830, -6048, -16744]));
    assert!(stderr(&cold).contains("cache written"));
    assert!(stderr(&cold).contains("tau(7) = -16744"));

    let warm = mml(dir.path(), &["coeffs", "--n-max", "7"]);
    assert!(stderr(&warm).contains("cache hit"));
    assert_eq!(json(&warm)["results"], rec["results"]);
    assert_eq!(json(&warm)["input_hash"], rec["input_hash"]);
}

#[test]
fn ingest_rejects_bad_lambda_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "n,lambda\n1,0.9\n2,-0.1\n").unwrap();
    let out = mml(dir.path(), &["coeffs", "--ingest", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rec = json(&out);
    assert_eq!(rec["code"], "COEFF_INVARIANT");
    assert_eq!(rec["exit_code"], 2);
    assert!(stderr(&out).contains("COEFF_INVARIANT"));
}

#[test]
fn moment_below_minimum_height_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(dir.path(), &["moment", "--T", "50"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["code"], "VALIDATION");
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none(), "nothing cached on validation failure");
}

#[test]
fn verify_synthetic_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let plot = dir.path().join("r.dat");
    let ok = mml(
        dir.path(),
        &["verify", "--synthetic-exponent", "0.5", "--csv", csv.to_str().unwrap(), "--plot", plot.to_str().unwrap()],
    );
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stderr(&ok).contains("PASS"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
    assert!(std::fs::read_to_string(&plot).unwrap().starts_with('#'));

    let fail = mml(dir.path(), &["verify", "--synthetic-exponent", "0.9", "--threshold", "0.85"]);
    assert_eq!(fail.status.code(), Some(3));
    assert_eq!(json(&fail)["status"], "threshold_fail");
}

#[test]
fn osclab_default_and_malformed_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(dir.path(), &["osclab"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&out)["results"]["pass"], true);

    let p = dir.path().join("p.toml");
    std::fs::write(&p, "[[problem]\nname = \"x\"\n").unwrap();
    let out = mml(dir.path(), &["osclab", "--problems", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["code"], "PARSE_ERROR");
}

#[test]
fn meanvalue_output_file_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mv.json");
    let args = ["meanvalue", "--a", "1,-0.5,0.25", "--T", "20", "--output", path.to_str().unwrap()];
    let out = mml(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let first: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(first["results"]["n"], 3);
    assert!(first["results"]["pass"].as_bool().unwrap());

    mml(dir.path(), &args);
    let second: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(first["results"], second["results"]);
    assert_eq!(first["input_hash"], second["input_hash"]);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[meanvalue]\nT = 30.0\ncoefficients = [1.0]\n").unwrap();
    let from_file = json(&mml(dir.path(), &["meanvalue", "--config", cfg.to_str().unwrap()]));
    assert_eq!(from_file["config"]["meanvalue"]["T"], 30.0);
    let flagged = json(&mml(dir.path(), &["meanvalue", "--config", cfg.to_str().unwrap(), "--T", "40"]));
    assert_eq!(flagged["config"]["meanvalue"]["T"], 40.0);

    std::fs::write(&cfg, "[meanvalue]\nspeed = 1\n").unwrap();
    let out = mml(dir.path(), &["meanvalue", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["code"], "PARSE_ERROR");
}
