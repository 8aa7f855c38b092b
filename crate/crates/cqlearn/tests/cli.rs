//! The `cqlearn` binary: exit codes, output files and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn cqlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqlearn")).args(args).output().expect("binary runs")
}

fn run_into(out: &Path, experiment: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--experiment", experiment, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    cqlearn(&args)
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_into(dir.path(), "pb_gentleness", &["--seed", "1", "--trials", "500"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let exp_dir = dir.path().join("pb_gentleness");
    for file in ["report.json", "results.csv", "trace.jsonl"] {
        assert!(exp_dir.join(file).is_file(), "missing {file}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(exp_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "pb_gentleness");
    assert!(String::from_utf8_lossy(&res.stdout).contains("PASS chi2_gentleness_violations"));
}

#[test]
fn unknown_experiment_exits_one_and_lists_names() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_into(dir.path(), "no_such_experiment", &[]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(cqlearn::registry().iter().all(|e| err.contains(e.name)), "{err}");
}

#[test]
fn malformed_settings_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_into(dir.path(), "pb_gentleness", &["--eps", "abc"]).status.code(), Some(1));
    assert_eq!(run_into(dir.path(), "pb_gentleness", &["--set", "no_such_key=1"]).status.code(), Some(1));
    assert_eq!(run_into(dir.path(), "pb_gentleness", &["--trials", "0"]).status.code(), Some(1));
}

#[test]
fn failed_check_exits_two() {
    // a single-copy estimator cannot resolve ε = 0.15
    let dir = tempfile::tempdir().unwrap();
    let res = run_into(dir.path(), "ere_dense_update", &["--trials", "40", "--set", "q_copies=1", "--set", "n=6000"]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stdout));
}

#[test]
fn threshold_search_meets_success_floor() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_into(dir.path(), "threshold_search_success", &["--trials", "2000", "--seed", "7"]);
    assert_eq!(res.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&res.stdout);
    let rate: f64 = stdout
        .lines()
        .find(|l| l.contains("threshold_success_rate_m8"))
        .and_then(|l| l.split("observed=").nth(1))
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .expect("success rate line");
    assert!(rate >= 0.03, "{stdout}");
}

#[test]
fn same_seed_gives_identical_csv() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--seed", "11", "--trials", "50"];
    for dir in [&a, &b] {
        assert_eq!(run_into(dir.path(), "hypothesis_selection", &args).status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("hypothesis_selection/results.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "experiment = pb_exactness\ntrials = 9\n").unwrap();
    let out = dir.path().join("out");
    let res = cqlearn(&["run", "--config", cfg.to_str().unwrap(), "--trials", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("pb_exactness/report.json")).unwrap()).unwrap();
    assert_eq!(report["trials"], 2);
}

#[test]
fn list_shows_every_experiment() {
    let res = cqlearn(&["list"]);
    assert_eq!(res.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(stdout.lines().count(), cqlearn::registry().len());
    assert!(cqlearn::registry().iter().all(|e| stdout.contains(e.name)));
}
