//! Acceptance suite: every registered experiment at its default settings, one line
//! per check. Pass experiment names as arguments to run a subset.

use std::process::ExitCode;

use cqlearn::{execute, registry, Check, ExperimentConfig};

const SEED: u64 = 20_240_601;

/// Wall-clock ceilings in seconds for the experiments that have one.
const TIME_LIMITS: &[(&str, f64)] = &[
    ("pb_exactness", 5.0),
    ("gentle_event_faithfulness", 120.0),
    ("threshold_search_success", 600.0),
    ("erm_convergence", 1800.0),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut total = 0usize;
    for exp in registry() {
        if !filters.is_empty() && !filters.iter().any(|f| exp.name.contains(f.as_str())) {
            continue;
        }
        let cfg = ExperimentConfig { experiment: Some(exp.name.to_owned()), seed: SEED, ..ExperimentConfig::default() };
        let summary = match execute(&cfg) {
            Ok(s) => s,
            Err(e) => {
                println!("FAIL {}::run error: {e}", exp.name);
                failed.push(format!("{}::run", exp.name));
                continue;
            }
        };
        let mut checks = summary.outcome.checks.clone();
        if let Some(&(_, limit)) = TIME_LIMITS.iter().find(|(n, _)| *n == exp.name) {
            checks.push(Check::at_most(format!("{}_runtime_seconds", exp.name), summary.elapsed_seconds, limit));
        }
        for c in &checks {
            total += 1;
            println!("{}::{c}", exp.name);
            if !c.passed {
                failed.push(format!("{}::{}", exp.name, c.id));
            }
        }
        println!("     {} finished in {:.1}s with {} trials", exp.name, summary.elapsed_seconds, summary.trials);
    }
    println!("acceptance: {} checks, {} failed", total, failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &failed {
            println!("  failed: {f}");
        }
        ExitCode::FAILURE
    }
}
