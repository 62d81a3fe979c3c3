use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spectral-sdp"));
    for (key, _) in std::env::vars() {
        if key.starts_with("SPECTRAL_SDP_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_args_print_usage_and_fail() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_observation_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--n", "8", "--s", "2", "--m", "64", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result = json(&dir.path().join("result.json"));
    assert!(result["rel_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(result["converged"], true);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,objective,r_norm,s_norm\n"));
    assert_eq!(trace.lines().count(), result["iters"].as_u64().unwrap() as usize + 1);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["payload"]["seed"], 3);
}

#[test]
fn tiny_phase_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["phase", "--n", "10", "--m-grid", "40", "--s-grid", "2", "--trials", "2", "--jobs", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "m\\s,2");
    let count: usize = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(count <= 2);
    let pgm = fs::read(dir.path().join("phase.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n1 1\n255\n"));
}

#[test]
fn synth_then_solve_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--n", "12", "--s", "2", "--m", "144", "--seed", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let signal = json(&dir.path().join("signal.json"));
    assert_eq!(signal["s"], 2);
    let obs = json(&dir.path().join("observations.json"));
    assert_eq!(obs["m"], 144);
    let csv = fs::read_to_string(dir.path().join("signal.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);

    let solved = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["solve", "--signal"])
        .arg(dir.path().join("signal.json"))
        .arg("--observations")
        .arg(dir.path().join("observations.json"))
        .arg("--out")
        .arg(solved.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&solved.path().join("result.json"))["rel_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn non_convergence_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--n", "10", "--s", "2", "--m", "30", "--max-iters", "2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver failure"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"problem": {"n": 9, "s": 1, "m": 81}, "seed": 4, "solver": {"rho": 0.2}}"#).unwrap();
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .args(["--seed", "6", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let payload = &json(&dir.path().join("manifest.json"))["payload"];
    assert_eq!(payload["problem"]["n"], 9);
    assert_eq!(payload["solver"]["rho"], 0.2);
    assert_eq!(payload["seed"], 6);

    fs::write(&cfg, r#"{"seed": 1, "unexpected": true}"#).unwrap();
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifest_reproduces_run() {
    let first = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--n", "10", "--s", "2", "--m", "60", "--seed", "11"], first.path());
    assert_eq!(out.status.code(), Some(0));
    let second = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["solve", "--config"])
        .arg(first.path().join("manifest.json"))
        .arg("--out")
        .arg(second.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let (a, b) = (json(&first.path().join("result.json")), json(&second.path().join("result.json")));
    assert_eq!(a["iters"], b["iters"]);
    assert_eq!(a["signal_seed"], b["signal_seed"]);
    let diff = (a["rel_error"].as_f64().unwrap() - b["rel_error"].as_f64().unwrap()).abs();
    assert!(diff <= 1e-10);
}

#[test]
fn environment_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("SPECTRAL_SDP_N", "6")
        .env("SPECTRAL_SDP_S", "1")
        .env("SPECTRAL_SDP_M", "36")
        .args(["solve", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("result.json"))["n"], 6);
}

#[test]
fn bench_writes_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bench", "--seed", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.lines().last().unwrap().ends_with(",0.087,crashed"));
}
