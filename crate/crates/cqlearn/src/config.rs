//! Plain-text `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key has a default, and
//! command-line flags go through the same [`ExperimentConfig::set`] path as file
//! entries, so both reject unknown keys and malformed values alike.

use std::path::{Path, PathBuf};

use cqlearn_core::algorithms::{AlgorithmConfig, EstimatorBackend};
use cqlearn_core::simstate::{Backend, SimConfig};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{key}`{}", line_note(*.line))]
    UnknownKey { key: String, line: Option<usize> },
    #[error("`{key}` = `{value}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown experiment `{name}`; registered: {}", .registered.join(", "))]
    UnknownExperiment { name: String, registered: Vec<&'static str> },
    #[error("no experiment given; set `experiment` or pass --experiment")]
    MissingExperiment,
}

fn line_note(line: Option<usize>) -> String {
    line.map(|l| format!(" on line {l}")).unwrap_or_default()
}

/// Every accepted key with its default and meaning.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("experiment", "(none)", "registered experiment name"),
    ("seed", "0", "base seed; trial t uses stream t of this seed"),
    ("trials", "per experiment", "seeded trials or instances"),
    ("out", "out", "output directory"),
    ("backend", "per experiment", "simulation backend: dense | commuting"),
    ("eps", "per experiment", "precision ε"),
    ("delta", "per experiment", "failure probability δ"),
    ("n", "per experiment", "training-set or register size"),
    ("threads", "all cores", "worker threads (CQLEARN_THREADS caps it)"),
    ("noise_scale", "4", "D in the noise rate λ = 1/(D√n)"),
    ("k_repeats", "derived", "failure budget k per round"),
    ("t_rounds", "per experiment", "risk-estimation round cap"),
    ("q_copies", "3", "estimator copies q"),
    ("c1", "0.0025", "C₁ of the threshold-search sizing advisory"),
    ("c2", "4", "C₂ of the threshold-search sizing advisory"),
    ("block_len", "derived", "block length l"),
    ("estimator", "per experiment", "risk estimator: dense | commuting_dp"),
    ("dense_estimator_cap", "512", "largest dense estimator dimension"),
    ("max_compositions", "1000000", "largest composition count of the commuting estimator"),
    ("dense_qubit_cap", "14", "dense states need n·log₂d at most this"),
    ("particles", "100000", "particles for commuting expectations"),
    ("resample_threshold", "0.5", "ESS fraction that triggers resampling"),
    ("exact_pb_limit", "5000", "fresh commuting states up to this size get exact expectations"),
    ("posterior_attempts", "1000000", "proposal budget for commuting posteriors"),
    ("net_cap", "256", "largest empirical net the learner accepts"),
    ("net_sample_budget", "200", "candidates sampled from an infinite family"),
    ("net_prefix", "(off)", "build the net from the first m₀ labels only"),
    ("mc_samples", "100000", "Monte-Carlo labels for true risks"),
];

/// Values left unset fall back to each experiment's documented defaults.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub seed: u64,
    pub trials: Option<u64>,
    pub out: PathBuf,
    pub backend: Option<Backend>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub n: Option<u64>,
    pub threads: Option<usize>,
    pub noise_scale: f64,
    pub k_repeats: Option<u64>,
    pub t_rounds: Option<u64>,
    pub q_copies: u32,
    pub c1: f64,
    pub c2: f64,
    pub block_len: Option<u64>,
    pub estimator: Option<EstimatorBackend>,
    pub dense_estimator_cap: usize,
    pub max_compositions: u64,
    pub sim: SimConfig,
    pub net_cap: usize,
    pub net_sample_budget: usize,
    pub net_prefix: Option<u64>,
    pub mc_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let alg = AlgorithmConfig::default();
        Self {
            experiment: None,
            seed: 0,
            trials: None,
            out: PathBuf::from("out"),
            backend: None,
            eps: None,
            delta: None,
            n: None,
            threads: None,
            noise_scale: alg.noise_scale,
            k_repeats: None,
            t_rounds: None,
            q_copies: alg.q_copies,
            c1: alg.c_cal,
            c2: alg.c_offset,
            block_len: None,
            estimator: None,
            dense_estimator_cap: alg.dense_estimator_cap,
            max_compositions: alg.max_compositions,
            sim: SimConfig::default(),
            net_cap: 256,
            net_sample_budget: 200,
            net_prefix: None,
            mc_samples: 100_000,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_owned(),
        value: value.to_owned(),
        reason: e.to_string(),
    })
}

fn bad(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::BadValue { key: key.to_owned(), value: value.to_owned(), reason: reason.to_owned() }
}

impl ExperimentConfig {
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::parse_str(&text)
    }

    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { key, line: Some(i + 1) },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => self.experiment = Some(value.to_owned()),
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = Some(parse(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "backend" => {
                self.backend = Some(match value {
                    "dense" => Backend::Dense,
                    "commuting" => Backend::Commuting,
                    _ => return Err(bad(key, value, "expected dense or commuting")),
                })
            }
            "eps" => self.eps = Some(parse(key, value)?),
            "delta" => self.delta = Some(parse(key, value)?),
            "n" => self.n = Some(parse(key, value)?),
            "threads" => self.threads = Some(parse(key, value)?),
            "noise_scale" => self.noise_scale = parse(key, value)?,
            "k_repeats" => self.k_repeats = Some(parse(key, value)?),
            "t_rounds" => self.t_rounds = Some(parse(key, value)?),
            "q_copies" => self.q_copies = parse(key, value)?,
            "c1" => self.c1 = parse(key, value)?,
            "c2" => self.c2 = parse(key, value)?,
            "block_len" => self.block_len = Some(parse(key, value)?),
            "estimator" => {
                self.estimator = Some(match value {
                    "dense" => EstimatorBackend::Dense,
                    "commuting_dp" => EstimatorBackend::CommutingDp,
                    _ => return Err(bad(key, value, "expected dense or commuting_dp")),
                })
            }
            "dense_estimator_cap" => self.dense_estimator_cap = parse(key, value)?,
            "max_compositions" => self.max_compositions = parse(key, value)?,
            "dense_qubit_cap" => self.sim.dense_qubit_cap = parse(key, value)?,
            "particles" => self.sim.particles = parse(key, value)?,
            "resample_threshold" => self.sim.resample_threshold = parse(key, value)?,
            "exact_pb_limit" => self.sim.exact_pb_limit = parse(key, value)?,
            "posterior_attempts" => self.sim.posterior_attempts = parse(key, value)?,
            "net_cap" => self.net_cap = parse(key, value)?,
            "net_sample_budget" => self.net_sample_budget = parse(key, value)?,
            "net_prefix" => self.net_prefix = Some(parse(key, value)?),
            "mc_samples" => self.mc_samples = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.to_owned(), line: None }),
        }
        Ok(())
    }

    /// Algorithm settings with experiment defaults for the keys left unset.
    pub fn algorithm(&self, eps: f64, delta: f64, t_rounds: u64, estimator: EstimatorBackend) -> AlgorithmConfig {
        AlgorithmConfig {
            eps: self.eps.unwrap_or(eps),
            delta: self.delta.unwrap_or(delta),
            noise_scale: self.noise_scale,
            k_repeats: self.k_repeats,
            t_rounds: self.t_rounds.unwrap_or(t_rounds),
            q_copies: self.q_copies,
            c_cal: self.c1,
            c_offset: self.c2,
            block_len: self.block_len,
            estimator: self.estimator.unwrap_or(estimator),
            dense_estimator_cap: self.dense_estimator_cap,
            max_compositions: self.max_compositions,
            seed: self.seed,
            stream: 0,
            sim: self.sim.clone(),
        }
    }

    /// Worker count: the `threads` key, capped by `CQLEARN_THREADS` when that is set.
    pub fn worker_threads(&self) -> Option<usize> {
        let env = std::env::var("CQLEARN_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&t| t > 0);
        match (self.threads.filter(|&t| t > 0), env) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}
