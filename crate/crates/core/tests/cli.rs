use std::fs;
use std::process::Command;

use noisy_bfgs::cli::{read_csv, CSV_COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisy-bfgs"))
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "runs = 3\nmax_iters = 20\nseed = 42\n").unwrap();
    let prefix = dir.path().join("out").join("exp");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&prefix)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("runs 3"));
    for i in 0..3 {
        let rows = read_csv(&dir.path().join(format!("out/exp_run{i:02}.csv"))).unwrap();
        assert!(!rows.is_empty() && rows.len() <= 20);
        assert!(rows.iter().all(|r| r.run_id == i));
    }
    let all = fs::read_to_string(dir.path().join("out/exp_all.csv")).unwrap();
    assert_eq!(all.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/exp_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 42);
    assert_eq!(summary["runs"][2]["seed"], 44);
}

#[test]
fn noiseless_flag_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--noiseless", "--runs", "1", "--out"])
        .arg(dir.path().join("n"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("n_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"][0]["status"], "converged");
    assert_eq!(summary["l"], 1e-8);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "c1 = 0.5\nc2 = 0.1\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));

    let missing = bin().args(["run", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let negative = bin().args(["run", "--eps-f", "-1", "--out"]).arg(dir.path().join("x")).output().unwrap();
    assert_eq!(negative.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = bin()
        .args(["run", "--runs", "1", "--out"])
        .arg(blocker.join("exp"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn conflicting_lengthening_flags_are_rejected() {
    let out = bin().args(["run", "--l", "1", "--l-factor", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
