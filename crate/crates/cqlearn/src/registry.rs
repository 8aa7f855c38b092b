//! Experiment registry, shared run context and result types.

use std::fmt;

use cqlearn_core::StreamRng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{ConfigError, ExperimentConfig};
use crate::experiments;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Algorithm(#[from] cqlearn_core::algorithms::AlgorithmError),
    #[error(transparent)]
    Learner(#[from] cqlearn_core::learner::LearnerError),
    #[error(transparent)]
    Sim(#[from] cqlearn_core::simstate::SimError),
    #[error(transparent)]
    Pb(#[from] cqlearn_core::pbnoise::PbError),
    #[error(transparent)]
    Linalg(#[from] cqlearn_core::qcore::LinalgError),
    #[error(transparent)]
    Concept(#[from] cqlearn_core::concepts::ConceptError),
    #[error(transparent)]
    Net(#[from] cqlearn_core::nets::NetError),
    #[error(transparent)]
    Batch(#[from] cqlearn_core::batching::BatchError),
    #[error("invalid setting: {0}")]
    Setting(String),
    #[error("cannot write {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl ExperimentError {
    /// Errors caused by the requested settings rather than by the machine.
    pub fn is_configuration(&self) -> bool {
        !matches!(self, Self::Io { .. } | Self::Csv(_) | Self::Json(_) | Self::Pool(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    /// Informational value, never fails.
    Reported,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AtMost => "<=",
            Self::AtLeast => ">=",
            Self::Reported => "reported",
        })
    }
}

/// One pass/fail line of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub observed: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn at_most(id: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self {
            id: id.into(),
            observed,
            relation: Relation::AtMost,
            limit,
            passed: observed <= limit,
            detail: String::new(),
        }
    }

    pub fn at_least(id: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self {
            id: id.into(),
            observed,
            relation: Relation::AtLeast,
            limit,
            passed: observed >= limit,
            detail: String::new(),
        }
    }

    pub fn reported(id: impl Into<String>, observed: f64) -> Self {
        Self {
            id: id.into(),
            observed,
            relation: Relation::Reported,
            limit: f64::NAN,
            passed: true,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.relation, self.passed) {
            (Relation::Reported, _) => "INFO",
            (_, true) => "PASS",
            (_, false) => "FAIL",
        };
        write!(f, "{verdict} {} observed={}", self.id, Num(self.observed))?;
        if self.relation != Relation::Reported {
            write!(f, " {} {}", self.relation, Num(self.limit))?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Plain notation for ordinary magnitudes, scientific notation for tiny or huge ones.
struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e7).contains(&a) {
            write!(f, "{:e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Rows of `results.csv`; every cell is already formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Formats a value for CSV with the shortest round-tripping representation.
pub fn cell(x: impl fmt::Display) -> String {
    x.to_string()
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub table: Table,
    /// Summary numbers for `report.json`.
    pub metrics: Map<String, Value>,
    /// One JSON record per trial or instance for `trace.jsonl`.
    pub trace: Vec<Value>,
}

impl Outcome {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { table: Table::new(columns), ..Self::default() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        self.metrics.insert(key.to_owned(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }
}

pub type RunFn = fn(&Context) -> Result<Outcome, ExperimentError>;

pub struct Experiment {
    pub name: &'static str,
    /// The result the experiment validates, in words.
    pub anchor: &'static str,
    pub default_trials: u64,
    pub run: RunFn,
}

impl fmt::Debug for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).field("anchor", &self.anchor).finish()
    }
}

/// Everything an experiment sees: settings, its trial count and the worker pool.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub trials: u64,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(cfg: ExperimentConfig, default_trials: u64) -> Result<Self, ExperimentError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cfg.worker_threads() {
            builder = builder.num_threads(t);
        }
        let trials = cfg.trials.unwrap_or(default_trials);
        if trials == 0 {
            return Err(ExperimentError::Setting("trials must be positive".into()));
        }
        Ok(Self { cfg, trials, pool: builder.build()? })
    }

    /// Generator for trial `trial` of setting `setting`; independent of scheduling.
    pub fn rng(&self, setting: u64, trial: u64) -> StreamRng {
        StreamRng::new(self.cfg.seed, (setting << 32) | trial)
    }

    /// Runs `f(t)` for `t in 0..count` on the pool, results in trial order.
    pub fn par_map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }

    /// Like [`Self::par_map`] for fallible trials; the first error by trial index wins.
    pub fn try_par_map<T, F>(&self, count: u64, f: F) -> Result<Vec<T>, ExperimentError>
    where
        T: Send,
        F: Fn(u64) -> Result<T, ExperimentError> + Sync + Send,
    {
        self.par_map(count, f).into_iter().collect()
    }

    pub fn eps_or(&self, default: f64) -> f64 {
        self.cfg.eps.unwrap_or(default)
    }

    pub fn delta_or(&self, default: f64) -> f64 {
        self.cfg.delta.unwrap_or(default)
    }
}

pub fn registry() -> &'static [Experiment] {
    experiments::REGISTRY
}

pub fn find(name: &str) -> Result<&'static Experiment, ConfigError> {
    registry().iter().find(|e| e.name == name).ok_or_else(|| ConfigError::UnknownExperiment {
        name: name.to_owned(),
        registered: registry().iter().map(|e| e.name).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_anchored() {
        let names: std::collections::BTreeSet<_> = registry().iter().map(|e| e.name).collect();
        assert_eq!(names.len(), registry().len());
        assert!(registry().iter().all(|e| !e.anchor.is_empty() && e.default_trials > 0));
        assert!(names.contains("threshold_search_success"));
    }

    #[test]
    fn unknown_name_lists_registry() {
        let err = find("nope").unwrap_err();
        let text = err.to_string();
        assert!(registry().iter().all(|e| text.contains(e.name)));
    }

    #[test]
    fn checks_compare_inclusively() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::at_least("a", 0.5, 0.6).passed);
        assert!(Check::reported("a", f64::NAN).passed);
        assert_eq!(Check::at_most("x_small", 0.5, 1.0).to_string(), "PASS x_small observed=0.5 <= 1");
        assert_eq!(Check::at_most("tiny", 2.5e-15, 1e-12).to_string(), "PASS tiny observed=2.5e-15 <= 1e-12");
    }

    #[test]
    fn par_map_keeps_trial_order() {
        let cfg = ExperimentConfig { threads: Some(3), ..ExperimentConfig::default() };
        let ctx = Context::new(cfg, 10).unwrap();
        assert_eq!(ctx.par_map(100, |t| t * 2), (0..100).map(|t| t * 2).collect::<Vec<_>>());
        assert_ne!(ctx.rng(0, 1).position(), ctx.rng(1, 1).position());
    }
}
