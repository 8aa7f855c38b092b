//! `report.json`, `results.csv` and `trace.jsonl` under `<out>/<experiment>/`.
//!
//! The CSV depends only on the configuration and seed. Wall-clock timings go to the
//! JSON files alone.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::registry::{Check, Experiment, ExperimentError, Outcome};

#[derive(Serialize)]
struct Report<'a> {
    experiment: &'a str,
    anchor: &'a str,
    seed: u64,
    trials: u64,
    passed: bool,
    elapsed_seconds: f64,
    checks: &'a [Check],
    metrics: &'a Map<String, Value>,
    config: &'a ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct Written {
    pub dir: PathBuf,
    pub report: PathBuf,
    pub csv: PathBuf,
    pub trace: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_owned(), source }
}

pub fn write_outputs(
    exp: &Experiment,
    cfg: &ExperimentConfig,
    trials: u64,
    outcome: &Outcome,
    elapsed_seconds: f64,
) -> Result<Written, ExperimentError> {
    let dir = cfg.out.join(exp.name);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let report = dir.join("report.json");
    let body = Report {
        experiment: exp.name,
        anchor: exp.anchor,
        seed: cfg.seed,
        trials,
        passed: outcome.passed(),
        elapsed_seconds,
        checks: &outcome.checks,
        metrics: &outcome.metrics,
        config: cfg,
    };
    fs::write(&report, serde_json::to_string_pretty(&body)?).map_err(io_err(&report))?;

    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(&outcome.table.columns)?;
    for row in &outcome.table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    let trace = dir.join("trace.jsonl");
    let mut f = std::io::BufWriter::new(fs::File::create(&trace).map_err(io_err(&trace))?);
    let header = json!({ "record": "run", "experiment": exp.name, "seed": cfg.seed, "trials": trials,
        "elapsed_seconds": elapsed_seconds, "config": cfg });
    writeln!(f, "{header}").map_err(io_err(&trace))?;
    for rec in &outcome.trace {
        writeln!(f, "{rec}").map_err(io_err(&trace))?;
    }
    f.flush().map_err(io_err(&trace))?;

    Ok(Written { dir, report, csv: csv_path, trace })
}
