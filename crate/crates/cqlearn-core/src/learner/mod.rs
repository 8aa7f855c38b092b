//! End-to-end learning from a classical-quantum source: sample a training set,
//! cover the class by an empirical net on its labels, run a measurement procedure
//! on the quantum register, and validate the outcome against oracle risks.
//!
//! The learning path only touches the training state through
//! [`crate::simstate::StateHandle`] measurements. Oracle risks are computed in
//! [`oracle`], which is the only place the true channel outputs are read.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    ere_shadow, erm_projector, hypothesis_selection, AlgorithmConfig, AlgorithmError, MuSource, Schedule,
};
use crate::concepts::{ConceptClass, ConceptError, ConceptKind, ConceptRef, CqSource, Label, ParamRecord};
use crate::nets::{build_weighted_net, EmpiricalNet, NetError, NetNorm};
use crate::qcore::DensityMatrix;
use crate::rng::StreamRng;
use crate::simstate::{Backend, ProductState, Runs, SimConfig, SimError, SiteProjectors};

pub mod oracle;

pub use oracle::{uniform_convergence_experiment, ConvergencePoint, UniformConvergenceCurve};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnerError {
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("a training set needs at least one sample")]
    NoSamples,
    #[error("class holds {got:?} concepts, this task needs {expected:?}")]
    WrongKind { expected: ConceptKind, got: ConceptKind },
    #[error("net has {size} members, above the cap of {cap}; ε = {required_eps:.4} would fit")]
    NetTooLarge { size: usize, cap: usize, required_eps: f64 },
    #[error("net over {labels} distinct labels and {pool} candidates is too costly; set a label prefix")]
    NetWorkload { labels: usize, pool: usize },
    #[error("uniform convergence needs a finite class and a nonempty grid")]
    BadExperiment,
}

/// Pool-size × label-count product above which nets are refused.
const NET_WORKLOAD_CAP: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: AlgorithmConfig,
    /// Training-set size.
    pub n: u64,
    pub backend: Backend,
    /// Net radius; the algorithm's `ε` when unset.
    pub net_eps: Option<f64>,
    pub net_cap: usize,
    /// Candidates sampled from an infinite family before the net is extracted.
    pub net_sample_budget: usize,
    /// Build the net from the first `m₀` labels only.
    pub net_prefix: Option<u64>,
    pub mu_source: MuSource,
    /// Monte-Carlo labels for true risks on infinite label spaces.
    pub mc_samples: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            algorithm: AlgorithmConfig::default(),
            n: 100_000,
            backend: Backend::Commuting,
            net_eps: None,
            net_cap: 256,
            net_sample_budget: 200,
            net_prefix: None,
            mu_source: MuSource::Estimated,
            mc_samples: 100_000,
        }
    }
}

impl LearnerConfig {
    pub fn net_eps(&self) -> f64 {
        self.net_eps.unwrap_or(self.algorithm.eps)
    }
}

/// `n` samples from a source: labels (run-length encoded) and the product state
/// `⊗ᵢ ρ(xᵢ)`, which is prepared once.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    /// Labels grouped into runs; the state's sites follow the same order.
    pub labels: Runs<Label>,
    /// The first labels in draw order, kept for prefix nets.
    pub prefix: Vec<Label>,
    pub state: ProductState,
}

/// Draws `n` i.i.d. labels and prepares the quantum register.
///
/// Sites are reordered so equal labels are adjacent; a product state's sites carry no
/// order, so this only compresses the representation. The first `keep_prefix` labels
/// are also kept in draw order.
pub fn draw_training_set(
    source: &dyn CqSource,
    n: u64,
    keep_prefix: u64,
    backend: Backend,
    sim: &SimConfig,
    rng: &mut StreamRng,
) -> Result<TrainingSet, LearnerError> {
    if n == 0 {
        return Err(LearnerError::NoSamples);
    }
    let mut prefix = Vec::new();
    let labels = match source.support() {
        Some(support) => {
            let mut counts = alloc::vec![0u64; support.len()];
            for i in 0..n {
                let k = source.sample_support_index(rng).unwrap_or(0);
                counts[k] += 1;
                if i < keep_prefix {
                    prefix.push(support[k].0.clone());
                }
            }
            Runs::from_runs(support.iter().map(|(x, _)| x.clone()).zip(counts).collect())
        }
        None => {
            let all: Vec<Label> = (0..n).map(|_| source.sample_label(rng)).collect();
            prefix = all.iter().take(keep_prefix as usize).cloned().collect();
            Runs::from_sites(all)
        }
    };
    let sites = labels.try_map(|x| source.channel(x))?;
    let state = ProductState::new(sites, backend, sim)?;
    Ok(TrainingSet { labels, prefix, state })
}

/// Distinct labels with multiplicities.
fn weighted_labels<'a>(labels: impl IntoIterator<Item = (&'a Label, u64)>) -> (Vec<Label>, Vec<f64>) {
    let mut out: Vec<(Label, f64)> = Vec::new();
    for (x, c) in labels {
        match out.iter_mut().find(|(y, _)| y == x) {
            Some(e) => e.1 += c as f64,
            None => out.push((x.clone(), c as f64)),
        }
    }
    out.into_iter().unzip()
}

/// Net on the training labels (or their prefix), refusing nets above the cap.
pub fn training_net(
    cls: &ConceptClass,
    train: &TrainingSet,
    cfg: &LearnerConfig,
    rng: &mut StreamRng,
) -> Result<EmpiricalNet, LearnerError> {
    let (labels, weights) = match cfg.net_prefix {
        Some(m0) => weighted_labels(train.prefix.iter().take(m0 as usize).map(|x| (x, 1))),
        None => weighted_labels(train.labels.runs().iter().map(|(x, c)| (x, *c))),
    };
    let pool = cls.members().map_or(cfg.net_sample_budget, <[ConceptRef]>::len);
    if labels.len().saturating_mul(pool) > NET_WORKLOAD_CAP {
        return Err(LearnerError::NetWorkload { labels: labels.len(), pool });
    }
    let q = NetNorm::for_kind(cls.kind());
    let eps = cfg.net_eps();
    let net = build_weighted_net(cls, &labels, &weights, eps, q, cfg.net_sample_budget, &mut rng.clone())?;
    if net.len() <= cfg.net_cap {
        return Ok(net);
    }
    let mut required_eps = eps;
    for _ in 0..40 {
        required_eps *= 1.5;
        let wider =
            build_weighted_net(cls, &labels, &weights, required_eps, q, cfg.net_sample_budget, &mut rng.clone())?;
        if wider.len() <= cfg.net_cap {
            break;
        }
    }
    Err(LearnerError::NetTooLarge { size: net.len(), cap: cfg.net_cap, required_eps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    /// Projector class, risk minimization.
    Erm,
    /// Projector class, risk estimation for every net member.
    Shadow,
    /// State class, hypothesis selection.
    StateSelection,
}

/// How `inf_c R(c)` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfRiskBasis {
    /// The source is realizable by the class: zero.
    Realizable,
    /// Minimum over every member of a finite class.
    ClassMinimum,
    /// Minimum over the sampled candidate pool of an infinite family.
    PoolMinimum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptRisk {
    /// Position among the net members.
    pub index: usize,
    pub params: ParamRecord,
    pub selected: bool,
    /// Estimated acceptance `μ̂` (risk minimization and estimation only).
    pub estimate: Option<f64>,
    pub empirical_risk: f64,
    pub true_risk: f64,
    pub true_risk_se: f64,
    /// `true_risk − empirical_risk`.
    pub generalization_gap: f64,
    /// `|μ̂ − (1 − true_risk)|`, when there is an estimate.
    pub estimate_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub task: Task,
    pub n: u64,
    pub seed: u64,
    pub stream: u64,
    pub backend: Backend,
    pub eps: f64,
    pub delta: f64,
    pub net_eps: f64,
    pub net_size: usize,
    pub net_prefix: Option<u64>,
    pub net_audited_on_sample: bool,
    pub schedule: Option<Schedule>,
    pub selected: Option<usize>,
    pub degenerate: bool,
    pub concepts: Vec<ConceptRisk>,
    pub inf_risk: f64,
    pub inf_risk_basis: InfRiskBasis,
    /// Selected true risk minus `inf_risk`.
    pub excess_risk: Option<f64>,
    /// Largest `estimate_gap`.
    pub max_estimate_gap: Option<f64>,
    /// The task's tolerance: `7ε`, `3ε` or `6ε` (on `R − 3·inf R`).
    pub target: f64,
    pub success: bool,
}

fn require_kind(cls: &ConceptClass, expected: ConceptKind) -> Result<(), LearnerError> {
    if cls.kind() != expected {
        return Err(LearnerError::WrongKind { expected, got: cls.kind() });
    }
    Ok(())
}

fn projector_lists(members: &[ConceptRef], labels: &Runs<Label>) -> Result<Vec<SiteProjectors>, LearnerError> {
    Ok(members.iter().map(|c| labels.try_map(|x| c.eval_projector(x))).collect::<Result<_, _>>()?)
}

fn state_lists(members: &[ConceptRef], labels: &Runs<Label>) -> Result<Vec<Runs<DensityMatrix>>, LearnerError> {
    Ok(members.iter().map(|c| labels.try_map(|x| c.eval_state(x))).collect::<Result<_, _>>()?)
}

/// Streams: 1 data, 2 net, 3 measurements, 4 oracle validation.
struct Streams {
    data: StreamRng,
    net: StreamRng,
    measure: StreamRng,
    oracle: StreamRng,
}

impl Streams {
    fn new(cfg: &LearnerConfig) -> Self {
        let base = cfg.algorithm.rng();
        let s = cfg.algorithm.stream.wrapping_mul(8);
        Self { data: base.fork(s + 1), net: base.fork(s + 2), measure: base.fork(s + 3), oracle: base.fork(s + 4) }
    }
}

struct Prepared {
    train: TrainingSet,
    net: EmpiricalNet,
    members: Vec<ConceptRef>,
}

fn prepare(
    source: &dyn CqSource,
    cls: &ConceptClass,
    cfg: &LearnerConfig,
    rs: &mut Streams,
) -> Result<Prepared, LearnerError> {
    cfg.algorithm.validate()?;
    let keep = cfg.net_prefix.unwrap_or(0);
    let train = draw_training_set(source, cfg.n, keep, cfg.backend, &cfg.algorithm.sim, &mut rs.data)?;
    let net = training_net(cls, &train, cfg, &mut rs.net)?;
    let members = net.members();
    Ok(Prepared { train, net, members })
}

/// Risk minimization over a net of a projector class.
pub fn learn_projector_class(
    source: &dyn CqSource,
    cls: &ConceptClass,
    cfg: &LearnerConfig,
) -> Result<RiskReport, LearnerError> {
    require_kind(cls, ConceptKind::Projector)?;
    let mut rs = Streams::new(cfg);
    let p = prepare(source, cls, cfg, &mut rs)?;
    let lists = projector_lists(&p.members, &p.train.labels)?;
    let erm = erm_projector(&p.train.state, &lists, &cfg.algorithm, &mut rs.measure)?;
    let mut estimates = alloc::vec![None; p.members.len()];
    estimates[erm.concept] = Some(erm.mu_hat);
    let outcome = Outcome {
        task: Task::Erm,
        selected: Some(erm.concept),
        degenerate: erm.degenerate,
        estimates,
        schedule: Some(erm.schedule),
    };
    oracle::validate(source, cls, cfg, &p.train, &p.net, &p.members, outcome, &mut rs.oracle)
}

/// Risk estimation for every member of a net of a projector class.
pub fn shadow_cq(source: &dyn CqSource, cls: &ConceptClass, cfg: &LearnerConfig) -> Result<RiskReport, LearnerError> {
    require_kind(cls, ConceptKind::Projector)?;
    let mut rs = Streams::new(cfg);
    let p = prepare(source, cls, cfg, &mut rs)?;
    let lists = projector_lists(&p.members, &p.train.labels)?;
    let ere = ere_shadow(&p.train.state, &lists, &cfg.algorithm, &mut rs.measure)?;
    let estimates = ere.estimates.iter().map(|&v| Some(v)).collect();
    let outcome =
        Outcome { task: Task::Shadow, selected: None, degenerate: false, estimates, schedule: Some(ere.schedule) };
    oracle::validate(source, cls, cfg, &p.train, &p.net, &p.members, outcome, &mut rs.oracle)
}

/// Hypothesis selection over a trace-norm net of a state class.
pub fn learn_state_class(
    source: &dyn CqSource,
    cls: &ConceptClass,
    cfg: &LearnerConfig,
) -> Result<RiskReport, LearnerError> {
    require_kind(cls, ConceptKind::State)?;
    let mut rs = Streams::new(cfg);
    let p = prepare(source, cls, cfg, &mut rs)?;
    let hyps = state_lists(&p.members, &p.train.labels)?;
    let sel = hypothesis_selection(&p.train.state, &hyps, cfg.mu_source, &cfg.algorithm, &mut rs.measure)?;
    let schedule = sel.ere.as_ref().map(|e| e.schedule);
    let outcome = Outcome {
        task: Task::StateSelection,
        selected: Some(sel.selected),
        degenerate: false,
        estimates: alloc::vec![None; p.members.len()],
        schedule,
    };
    oracle::validate(source, cls, cfg, &p.train, &p.net, &p.members, outcome, &mut rs.oracle)
}

/// What the measurement procedure produced, before validation.
pub(crate) struct Outcome {
    task: Task,
    selected: Option<usize>,
    degenerate: bool,
    estimates: Vec<Option<f64>>,
    schedule: Option<Schedule>,
}

#[cfg(test)]
mod tests;
