//! Experiment harness for `cqlearn-core`: configuration, a registry of validation
//! experiments, seeded parallel execution and JSON/CSV output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod registry;

use std::time::Instant;

pub use config::{ConfigError, ExperimentConfig};
pub use registry::{find, registry, Check, Context, Experiment, ExperimentError, Outcome};

/// What a finished run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub experiment: &'static Experiment,
    pub trials: u64,
    pub outcome: Outcome,
    pub elapsed_seconds: f64,
    pub written: Option<output::Written>,
}

/// Runs the configured experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunSummary, ExperimentError> {
    let name = cfg.experiment.as_deref().ok_or(ConfigError::MissingExperiment)?;
    let exp = find(name)?;
    let ctx = Context::new(cfg.clone(), exp.default_trials)?;
    let start = Instant::now();
    let outcome = (exp.run)(&ctx)?;
    Ok(RunSummary {
        experiment: exp,
        trials: ctx.trials,
        outcome,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        written: None,
    })
}

/// Runs the configured experiment and writes its files under `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, ExperimentError> {
    let mut s = execute(cfg)?;
    s.written = Some(output::write_outputs(s.experiment, cfg, s.trials, &s.outcome, s.elapsed_seconds)?);
    Ok(s)
}
