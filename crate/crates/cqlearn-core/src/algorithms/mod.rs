//! Threshold search, empirical risk minimization and estimation, hypothesis
//! selection and the pure-state learner, acting on [`crate::simstate`] states.
//!
//! Every procedure consumes disjoint random blocks of one product state. Blocks are
//! drawn by run index and count over a [`CellInstance`], the coarsest partition of the
//! sites on which the state and every projector list are constant.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::batching::{draw_run_batches, BatchError};
use crate::concepts::ConceptError;
use crate::qcore::{DensityMatrix, LinalgError, Projector};
use crate::rng::StreamRng;
use crate::simstate::{common_refinement, Backend, ProductState, Runs, SimConfig, SimError, SiteProjectors};

mod ere;
mod erm;
mod estimator;
mod pure;
mod selection;
mod threshold;

pub use ere::{ere_shadow, search_bad_estimate, BadEstimateAttempt, BadEstimateSearch, EreReport, EreRound};
pub use erm::{erm_projector, CheckRecord, ErmAction, ErmReport, ErmStep};
pub use estimator::{
    estimator_predictions, update_estimator, Direction, EstimatorBackend, EstimatorState, PostSelection,
};
pub use pure::{pure_state_realizable_learner, PureLearnerReport};
pub use selection::{average_trace_distance, hypothesis_selection, MuSource, SelectionReport};
pub use threshold::{threshold_search, threshold_search_on, ThresholdSearch, ThresholdStep, ThresholdedConcept};

/// Per-attempt failure probability of one threshold search, `0.97`.
pub const SEARCH_MISS: f64 = 0.97;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgorithmError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("sizing violated: {inequality} fails with {lhs} < {rhs}")]
    Sizing { inequality: &'static str, lhs: u128, rhs: u128 },
    #[error("threshold search needs a fresh state")]
    NotFresh,
    #[error("the concept list is empty")]
    EmptyClass,
    #[error("projector list has {got} sites, state has {expected}")]
    LengthMismatch { expected: u64, got: u64 },
    #[error("site dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("count threshold r = {r} is outside [0, {q}]")]
    CountOutOfRange { r: i64, q: u32 },
    #[error("{what} needs {needed} entries, cap is {cap}")]
    Capacity { what: &'static str, needed: u128, cap: u128 },
    #[error("post-selection on concept {concept} has zero probability")]
    ZeroProbability { concept: usize },
    #[error("the commuting estimator needs diagonal projectors")]
    NotDiagonal,
    #[error("concept index {0} is out of range")]
    UnknownConcept(usize),
    #[error("block budget of {0} blocks is exhausted")]
    BlocksExhausted(u64),
}

/// Settings shared by all procedures. Defaults follow the failure-budget analysis:
/// `k = ⌈ln(2T/δ)/ln(1/0.97)⌉` consecutive failures before a round gives up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub eps: f64,
    pub delta: f64,
    /// `D` in the noise rate `λ = 1/(D√n)`.
    pub noise_scale: f64,
    /// Failure budget `k`; derived from `T` and `δ` when unset.
    pub k_repeats: Option<u64>,
    /// Round cap for risk estimation.
    pub t_rounds: u64,
    /// Copies `q` held by the risk estimator.
    pub q_copies: u32,
    /// `C₁` of the advisory threshold-search sizing `(ln m + C₂)² < C₁·l·ε²`.
    pub c_cal: f64,
    /// `C₂` of the same check.
    pub c_offset: f64,
    /// Block length `l`; the largest admissible length when unset.
    pub block_len: Option<u64>,
    pub estimator: EstimatorBackend,
    /// Largest dense estimator dimension `(S·d)^q`.
    pub dense_estimator_cap: usize,
    /// Largest number of copy compositions the commuting estimator enumerates.
    pub max_compositions: u64,
    pub seed: u64,
    pub stream: u64,
    pub sim: SimConfig,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            delta: 0.25,
            noise_scale: 4.0,
            k_repeats: None,
            t_rounds: 10,
            q_copies: 3,
            c_cal: 1.0 / 400.0,
            c_offset: 4.0,
            block_len: None,
            estimator: EstimatorBackend::CommutingDp,
            dense_estimator_cap: 512,
            max_compositions: 1_000_000,
            seed: 0,
            stream: 0,
            sim: SimConfig::default(),
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(AlgorithmError::Config("eps must lie in (0, 1)"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AlgorithmError::Config("delta must lie in (0, 1)"));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(AlgorithmError::Config("noise scale must be positive"));
        }
        if self.k_repeats == Some(0) || self.t_rounds == 0 || self.q_copies == 0 || self.block_len == Some(0) {
            return Err(AlgorithmError::Config("all counts must be at least 1"));
        }
        Ok(())
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng::new(self.seed, self.stream)
    }

    /// Binary-search steps `T = ⌊log₂((1−4ε)/(2ε))⌋ + 1` after which the interval
    /// is shorter than `6ε`.
    pub fn erm_thresholds(&self) -> u64 {
        let ratio = (1.0 - 4.0 * self.eps) / (2.0 * self.eps);
        if ratio <= 1.0 {
            1
        } else {
            ratio.log2().floor() as u64 + 1
        }
    }

    /// `k` for a procedure with `t` rounds.
    pub fn failure_budget(&self, t: u64) -> u64 {
        self.k_repeats
            .unwrap_or_else(|| ((2.0 * t as f64 / self.delta).ln() / (1.0 / SEARCH_MISS).ln()).ceil().max(1.0) as u64)
    }

    /// Block plan for `t` rounds of at most `k` block pairs each on `n` sites.
    pub fn schedule(&self, n: u64, t: u64) -> Result<Schedule, AlgorithmError> {
        let k = self.failure_budget(t);
        let per_len = 6u128 * t as u128 * k as u128;
        let len = match self.block_len {
            Some(l) => l,
            None => (n as u128 / per_len) as u64,
        };
        if len == 0 || (n as u128) < per_len * len as u128 {
            return Err(AlgorithmError::Sizing {
                inequality: "n ≥ 6·T·k·l",
                lhs: n as u128,
                rhs: per_len * len.max(1) as u128,
            });
        }
        Ok(Schedule { n, rounds: t, k, len, blocks: 2 * t * k })
    }

    /// `(ln m + C₂)² < C₁·l·e²` for a threshold search with precision `e` over `m`
    /// lists of length `l`.
    pub fn advisory(&self, m: usize, len: u64, e: f64) -> SizingAdvisory {
        let lhs = ((m.max(1) as f64).ln() + self.c_offset).powi(2);
        let rhs = self.c_cal * len as f64 * e * e;
        SizingAdvisory { lhs, rhs, satisfied: lhs < rhs }
    }
}

/// Rounds, failure budget, block length and block count of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub n: u64,
    pub rounds: u64,
    pub k: u64,
    pub len: u64,
    pub blocks: u64,
}

/// Outcome of a constant-dependent sizing condition; a failed check is a warning only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingAdvisory {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// A product state and projector lists refined to common cells: site states and
/// every projector are constant on each cell.
#[derive(Clone, Debug)]
pub struct CellInstance {
    lens: Vec<u64>,
    states: Vec<DensityMatrix>,
    /// `projectors[c][k]` is concept `c` on cell `k`.
    projectors: Vec<Vec<Projector>>,
    dim: usize,
    backend: Backend,
    sim: SimConfig,
}

impl CellInstance {
    pub fn new(state: &ProductState, concepts: &[SiteProjectors], sim: &SimConfig) -> Result<Self, AlgorithmError> {
        if concepts.is_empty() {
            return Err(AlgorithmError::EmptyClass);
        }
        let (n, dim) = (state.n(), state.dim());
        for p in concepts {
            if p.len() != n {
                return Err(AlgorithmError::LengthMismatch { expected: n, got: p.len() });
            }
            if let Some(bad) = p.values().find(|p| p.dim() != dim) {
                return Err(AlgorithmError::Dimension { expected: dim, got: bad.dim() });
            }
        }
        let ends = state.sites().ends().chain(concepts.iter().flat_map(|p| p.ends())).collect::<Vec<_>>();
        let cells = common_refinement(n, ends);
        fn pick<T: Clone>(runs: &[(T, u64)], idx: Vec<usize>) -> Vec<T> {
            idx.into_iter().map(|i| runs[i].0.clone()).collect()
        }
        let states = pick(state.sites().runs(), state.sites().locate(&cells));
        let projectors = concepts.iter().map(|p| pick(p.runs(), p.locate(&cells))).collect();
        Ok(Self {
            lens: cells.iter().map(|c| c.len).collect(),
            states,
            projectors,
            dim,
            backend: state.backend(),
            sim: sim.clone(),
        })
    }

    pub fn n(&self) -> u64 {
        self.lens.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn concept_count(&self) -> usize {
        self.projectors.len()
    }

    pub fn cell_lens(&self) -> &[u64] {
        &self.lens
    }

    pub fn cell_states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn cell_projectors(&self, c: usize) -> &[Projector] {
        &self.projectors[c]
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn sim(&self) -> &SimConfig {
        &self.sim
    }

    /// The sub-state on a `(cell, count)` selection.
    pub fn block_state(&self, sel: &[(usize, u64)]) -> Result<ProductState, AlgorithmError> {
        let runs = sel.iter().map(|&(k, c)| (self.states[k].clone(), c)).collect();
        Ok(ProductState::new(Runs::from_runs(runs), self.backend, &self.sim)?)
    }

    /// Concept `c`'s projectors on a selection.
    pub fn block_projectors(&self, c: usize, sel: &[(usize, u64)]) -> SiteProjectors {
        Runs::from_runs(sel.iter().map(|&(k, n)| (self.projectors[c][k].clone(), n)).collect())
    }

    /// `μ_c = (1/n) Σᵢ Tr[ρᵢ Πᵢ^{(c)}]` for every concept. Oracle quantity.
    pub fn true_means(&self) -> Result<Vec<f64>, AlgorithmError> {
        let n = self.n() as f64;
        self.projectors
            .iter()
            .map(|ps| {
                let mut total = 0.0;
                for ((rho, p), &len) in self.states.iter().zip(ps).zip(&self.lens) {
                    total += len as f64 * rho.probability(p)?;
                }
                Ok(total / n)
            })
            .collect()
    }
}

/// Draws disjoint blocks one at a time from what earlier blocks left over.
///
/// Equal in law to drawing every block up front with [`draw_run_batches`].
#[derive(Clone, Debug)]
pub struct BlockSource {
    left: Vec<u64>,
    len: u64,
    budget: u64,
    used: u64,
}

impl BlockSource {
    pub fn new(cell_lens: &[u64], len: u64, budget: u64) -> Self {
        Self { left: cell_lens.to_vec(), len, budget, used: 0 }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    pub fn next(&mut self, rng: &mut StreamRng) -> Result<Vec<(usize, u64)>, AlgorithmError> {
        if self.used >= self.budget {
            return Err(AlgorithmError::BlocksExhausted(self.budget));
        }
        let sel = draw_run_batches(&self.left, 1, self.len, rng)?.pop().unwrap_or_default();
        for &(k, c) in &sel {
            self.left[k] -= c;
        }
        self.used += 1;
        Ok(sel)
    }
}
