//! Empirical risk minimization for projector-valued concepts: a binary search
//! over the best acceptance level `max_c μ_c`, where each step is a threshold
//! search on one block followed by a destructive check on the next.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::threshold::{threshold_search_on, ThresholdSearch, ThresholdedConcept};
use super::{AlgorithmConfig, AlgorithmError, BlockSource, CellInstance, Schedule, SizingAdvisory};
use crate::rng::StreamRng;
use crate::simstate::{ProductState, SiteProjectors, StateHandle};

/// Destructive `Π̄^{(c)}` measurement confirming a search result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub concept: usize,
    pub count: u64,
    /// `⌈l(θ − 7ε/4)⌉`, clamped at zero.
    pub needed: u64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ErmAction {
    /// Threshold search on block `2s−1`, check on block `2s` if a concept came back.
    Search { s: u64, search: ThresholdSearch, check: Option<CheckRecord> },
    /// `k` consecutive failures: `high ← θ`.
    Lower,
}

/// One loop iteration with the interval it started from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmStep {
    pub theta: f64,
    pub low: f64,
    pub high: f64,
    pub failures: u64,
    pub action: ErmAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmReport {
    pub concept: usize,
    /// Final `θ`, the estimate of `μ_{c*}`.
    pub mu_hat: f64,
    /// No concept was ever confirmed; `concept` was drawn uniformly.
    pub degenerate: bool,
    /// The loop stopped because blocks ran out before the interval closed.
    pub budget_exhausted: bool,
    pub schedule: Schedule,
    pub advisory: SizingAdvisory,
    pub blocks_used: u64,
    pub steps: Vec<ErmStep>,
}

/// Returns `c*` with `μ̂_{c*}` close to both `μ_{c*}` and `max_c μ_c`.
///
/// `T = ⌊log₂((1−4ε)/(2ε))⌋ + 1` interval updates each use at most `k` block pairs,
/// so `2Tk` blocks of length `l` are budgeted and `n ≥ 6Tkl` is required.
pub fn erm_projector(
    state: &ProductState,
    concepts: &[SiteProjectors],
    cfg: &AlgorithmConfig,
    rng: &mut StreamRng,
) -> Result<ErmReport, AlgorithmError> {
    cfg.validate()?;
    let inst = CellInstance::new(state, concepts, &cfg.sim)?;
    let m = inst.concept_count();
    let schedule = cfg.schedule(inst.n(), cfg.erm_thresholds())?;
    let advisory = cfg.advisory(m, schedule.len, cfg.eps / 4.0);
    let eps = cfg.eps;
    let l = schedule.len;
    let mut blocks = BlockSource::new(inst.cell_lens(), l, schedule.blocks);

    let (mut theta, mut low, mut high) = (0.5f64, 0.0f64, 1.0f64);
    let (mut failures, mut s) = (0u64, 0u64);
    let mut selected = None;
    let mut steps = Vec::new();
    let mut budget_exhausted = false;

    while high - low >= 6.0 * eps {
        let start = (theta, low, high, failures);
        let action = if failures < schedule.k {
            if blocks.remaining() < 2 {
                budget_exhausted = true;
                break;
            }
            s += 1;
            let search_block = blocks.next(rng)?;
            let check_block = blocks.next(rng)?;
            let list: Vec<ThresholdedConcept> = (0..m)
                .map(|c| ThresholdedConcept { projectors: inst.block_projectors(c, &search_block), theta: theta - eps })
                .collect();
            let mut handle = StateHandle::new(inst.block_state(&search_block)?, &cfg.sim)?;
            let search = threshold_search_on(&mut handle, &list, eps / 4.0, cfg.noise_scale, rng)?;
            let check = match search.selected {
                None => {
                    failures += 1;
                    None
                }
                Some(c) => {
                    let mut h = StateHandle::new(inst.block_state(&check_block)?, &cfg.sim)?;
                    let count = h.measure_average(&inst.block_projectors(c, &check_block), rng)?;
                    let needed = count_threshold(l, theta - 1.75 * eps);
                    let passed = count >= needed;
                    if passed {
                        selected = Some(c);
                        low = theta - 2.0 * eps;
                        theta = (high + low) / 2.0;
                        failures = 0;
                    } else {
                        failures += 1;
                    }
                    Some(CheckRecord { concept: c, count, needed, passed })
                }
            };
            ErmAction::Search { s, search, check }
        } else {
            high = theta;
            theta = (high + low) / 2.0;
            failures = 0;
            ErmAction::Lower
        };
        steps.push(ErmStep { theta: start.0, low: start.1, high: start.2, failures: start.3, action });
    }

    let (concept, degenerate) = match selected {
        Some(c) => (c, false),
        None => (rng.random_range(0..m), true),
    };
    Ok(ErmReport {
        concept,
        mu_hat: theta,
        degenerate,
        budget_exhausted,
        schedule,
        advisory,
        blocks_used: blocks.used(),
        steps,
    })
}

/// `⌈l·x⌉` clamped at zero; ceiling keeps acceptance conservative.
pub(crate) fn count_threshold(l: u64, x: f64) -> u64 {
    let v = (l as f64 * x - 1e-9).ceil();
    if v <= 0.0 {
        0
    } else {
        v as u64
    }
}
