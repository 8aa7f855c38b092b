//! Validation with access to the true channel outputs `ρ(x)`.
//!
//! Nothing on the learning path calls into this module; it only scores what the
//! measurement procedures returned.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{ConceptRisk, InfRiskBasis, LearnerConfig, LearnerError, Outcome, RiskReport, Task, TrainingSet};
use crate::concepts::{loss, true_risk, ConceptClass, ConceptRef, CqSource, Label, RiskEstimate};
use crate::nets::{uniform_convergence_bound, EmpiricalNet};
use crate::rng::StreamRng;
use crate::sum::CompensatedSum;

/// Average loss over the training labels, run by run.
fn training_risk(c: &ConceptRef, source: &dyn CqSource, train: &TrainingSet) -> Result<f64, LearnerError> {
    let mut acc = CompensatedSum::new();
    for (x, count) in train.labels.runs() {
        acc.add(*count as f64 * loss(c.as_ref(), x, &source.channel(x)?)?);
    }
    Ok(acc.value() / train.labels.len() as f64)
}

/// True risks of several concepts on one shared set of Monte-Carlo labels.
fn true_risks(
    concepts: &[ConceptRef],
    source: &dyn CqSource,
    mc_samples: usize,
    rng: &StreamRng,
) -> Result<Vec<RiskEstimate>, LearnerError> {
    concepts.iter().map(|c| Ok(true_risk(c.as_ref(), source, mc_samples, &mut rng.clone())?)).collect()
}

fn inf_risk(
    source: &dyn CqSource,
    cls: &ConceptClass,
    net: &EmpiricalNet,
    cfg: &LearnerConfig,
    rng: &StreamRng,
) -> Result<(f64, InfRiskBasis), LearnerError> {
    if source.realizable() == Some(true) {
        return Ok((0.0, InfRiskBasis::Realizable));
    }
    let (pool, basis) = match cls.members() {
        Some(m) => (m, InfRiskBasis::ClassMinimum),
        None => (net.pool(), InfRiskBasis::PoolMinimum),
    };
    let risks = true_risks(pool, source, cfg.mc_samples, rng)?;
    Ok((risks.iter().map(|r| r.value).fold(f64::INFINITY, f64::min), basis))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn validate(
    source: &dyn CqSource,
    cls: &ConceptClass,
    cfg: &LearnerConfig,
    train: &TrainingSet,
    net: &EmpiricalNet,
    members: &[ConceptRef],
    outcome: Outcome,
    rng: &mut StreamRng,
) -> Result<RiskReport, LearnerError> {
    let truth = true_risks(members, source, cfg.mc_samples, rng)?;
    let mut concepts = Vec::with_capacity(members.len());
    for (i, (c, r)) in members.iter().zip(&truth).enumerate() {
        let empirical = training_risk(c, source, train)?;
        let estimate = outcome.estimates[i];
        concepts.push(ConceptRisk {
            index: i,
            params: c.params(),
            selected: outcome.selected == Some(i),
            estimate,
            empirical_risk: empirical,
            true_risk: r.value,
            true_risk_se: r.std_error,
            generalization_gap: r.value - empirical,
            estimate_gap: estimate.map(|mu| (mu - (1.0 - r.value)).abs()),
        });
    }
    let (inf, inf_basis) = inf_risk(source, cls, net, cfg, rng)?;
    let selected_risk = outcome.selected.map(|s| concepts[s].true_risk);
    let max_estimate_gap = concepts.iter().filter_map(|c| c.estimate_gap).reduce(f64::max);
    let eps = cfg.algorithm.eps;
    let (target, success) = match outcome.task {
        Task::Erm => (7.0 * eps, selected_risk.is_some_and(|r| r - inf <= 7.0 * eps)),
        Task::Shadow => (3.0 * eps, max_estimate_gap.is_some_and(|g| g <= 3.0 * eps)),
        Task::StateSelection => (6.0 * eps, selected_risk.is_some_and(|r| r - 3.0 * inf < 6.0 * eps)),
    };
    Ok(RiskReport {
        task: outcome.task,
        n: train.labels.len(),
        seed: cfg.algorithm.seed,
        stream: cfg.algorithm.stream,
        backend: cfg.backend,
        eps,
        delta: cfg.algorithm.delta,
        net_eps: cfg.net_eps(),
        net_size: net.len(),
        net_prefix: cfg.net_prefix,
        net_audited_on_sample: net.audited_on_sample(),
        schedule: outcome.schedule,
        selected: outcome.selected,
        degenerate: outcome.degenerate,
        concepts,
        inf_risk: inf,
        inf_risk_basis: inf_basis,
        excess_risk: selected_risk.map(|r| r - inf),
        max_estimate_gap,
        target,
        success,
    })
}

/// Sup-gap statistics at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: u64,
    pub median: f64,
    pub mean: f64,
    pub q90: f64,
    /// Fraction of trials with `max_c |R(c) − R̂(c)| ≥ ε/4`.
    pub exceed_freq: f64,
    /// `4m·e^{−n(ε/4)²/32}`, the uniform-convergence bound for a class of `m` members.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformConvergenceCurve {
    pub eps: f64,
    pub trials: usize,
    pub points: Vec<ConvergencePoint>,
}

impl UniformConvergenceCurve {
    /// Each median is at most the previous one plus `band`.
    pub fn median_nonincreasing(&self, band: f64) -> bool {
        self.points.windows(2).all(|w| w[1].median <= w[0].median + band)
    }

    /// Exceedance stays within the bound plus three binomial standard errors wherever the bound is informative.
    pub fn within_bound(&self) -> bool {
        self.points.iter().filter(|p| p.bound < 1.0).all(|p| {
            let se = (p.bound * (1.0 - p.bound) / self.trials as f64).sqrt();
            p.exceed_freq <= p.bound + 3.0 * se
        })
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Classical-only experiment: how fast empirical risks on `n` labels approach the true risks,
/// uniformly over a finite class.
pub fn uniform_convergence_experiment(
    source: &dyn CqSource,
    cls: &ConceptClass,
    n_grid: &[u64],
    trials: usize,
    eps: f64,
    mc_samples: usize,
    rng: &mut StreamRng,
) -> Result<UniformConvergenceCurve, LearnerError> {
    let members = cls.members().ok_or(LearnerError::BadExperiment)?;
    if n_grid.is_empty() || n_grid.contains(&0) || trials == 0 {
        return Err(LearnerError::BadExperiment);
    }
    let truth: Vec<f64> = true_risks(members, source, mc_samples, &rng.fork(rng.position().stream ^ 0x5eed))?
        .iter()
        .map(|r| r.value)
        .collect();
    // Losses per support point, when the label distribution is finite.
    let table: Option<Vec<Vec<f64>>> = match source.support() {
        Some(support) => Some(
            support
                .iter()
                .map(|(x, _)| {
                    let rho = source.channel(x)?;
                    members.iter().map(|c| Ok(loss(c.as_ref(), x, &rho)?)).collect::<Result<Vec<_>, LearnerError>>()
                })
                .collect::<Result<_, _>>()?,
        ),
        None => None,
    };
    let log_cover = (members.len() as f64).ln();
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let mut gaps = Vec::with_capacity(trials);
        for _ in 0..trials {
            let mut sums = alloc::vec![0.0; members.len()];
            match &table {
                Some(table) => {
                    let mut counts = alloc::vec![0u64; table.len()];
                    for _ in 0..n {
                        counts[source.sample_support_index(rng).unwrap_or(0)] += 1;
                    }
                    for (row, &k) in table.iter().zip(&counts) {
                        for (s, l) in sums.iter_mut().zip(row) {
                            *s += k as f64 * l;
                        }
                    }
                }
                None => {
                    for _ in 0..n {
                        let x: Label = source.sample_label(rng);
                        let rho = source.channel(&x)?;
                        for (s, c) in sums.iter_mut().zip(members) {
                            *s += loss(c.as_ref(), &x, &rho)?;
                        }
                    }
                }
            }
            let gap = sums.iter().zip(&truth).map(|(s, r)| (s / n as f64 - r).abs()).fold(0.0, f64::max);
            gaps.push(gap);
        }
        gaps.sort_by(f64::total_cmp);
        let exceed = gaps.iter().filter(|&&g| g >= eps / 4.0).count();
        points.push(ConvergencePoint {
            n,
            median: quantile(&gaps, 0.5),
            mean: gaps.iter().sum::<f64>() / trials as f64,
            q90: quantile(&gaps, 0.9),
            exceed_freq: exceed as f64 / trials as f64,
            bound: uniform_convergence_bound(n, eps / 4.0, log_cover, 1.0),
        });
    }
    Ok(UniformConvergenceCurve { eps, trials, points })
}
