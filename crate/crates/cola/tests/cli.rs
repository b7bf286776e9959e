//! Binary-level contracts: exit codes, produced files, and diagnostics.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cola"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn run_on_shipped_config_exits_zero_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run"])
        .arg(repo_config("teacher_student.toml"))
        .arg("--output-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for file in [
        "results_raw.csv",
        "results_best.csv",
        "summary.csv",
        "results.json",
    ] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    let csv = std::fs::read_to_string(dir.path().join("results_raw.csv")).unwrap();
    assert!(csv.starts_with("task,method,schedule,seed,eval,test,flops,wall_time\n"));
}

#[test]
fn unknown_config_key_fails_with_its_name() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let base = std::fs::read_to_string(repo_config("teacher_student.toml")).unwrap();
    std::fs::write(&bad, format!("mystery_knob = 4\n{base}")).unwrap();
    let out = bin().args(["run"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mystery_knob"), "stderr was: {stderr}");
}

#[test]
fn missing_config_fails_nonzero() {
    let out = bin()
        .args(["run", "/nonexistent/nope.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn fw_demo_prints_pass_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fw-demo"])
        .arg(repo_config("fw_quadratic.toml"))
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"), "stdout was: {stdout}");
    let trace = std::fs::read_to_string(dir.path().join("fw_trace.csv")).unwrap();
    assert!(trace.starts_with("t,loss,gap,eta,oracle_residual\n"));
    assert_eq!(trace.lines().count(), 10_001);
}

#[test]
fn flops_table_shows_stepdown_grid() {
    let out = bin()
        .args([
            "flops",
            "--epochs",
            "5",
            "--knots",
            "3",
            "--ranks",
            "8,8",
            "--d",
            "64",
            "--k",
            "64",
            "--n-train",
            "1000",
            "--batch-size",
            "8",
            "--table",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ranks=8;6"));
    assert!(stdout.contains("ranks=8;2"));
}

#[test]
fn selftest_exits_zero() {
    let out = bin().args(["selftest"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}");
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn run_twice_is_byte_identical_modulo_wall_time() {
    let strip = |csv: &str| {
        csv.lines()
            .map(|l| match l.rfind(',') {
                Some(i) => l[..i].to_string(),
                None => l.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        let status = bin()
            .args(["run"])
            .arg(repo_config("teacher_student.toml"))
            .arg("--output-dir")
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
        let raw = std::fs::read_to_string(dir.path().join("results_raw.csv")).unwrap();
        let best = std::fs::read_to_string(dir.path().join("results_best.csv")).unwrap();
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        (strip(&raw), strip(&best), summary)
    };
    let a = run_once();
    let b = run_once();
    assert_eq!(a, b);
}
