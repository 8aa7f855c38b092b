//! Empirical risk estimation for a finite projector class: repeatedly look for a
//! concept whose current estimate is off, then post-select the estimator to fix it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::estimator::{update_estimator, Direction, EstimatorState, PostSelection};
use super::threshold::{threshold_search_on, ThresholdSearch, ThresholdedConcept};
use super::{AlgorithmConfig, AlgorithmError, BlockSource, CellInstance, Schedule, SizingAdvisory};
use crate::rng::StreamRng;
use crate::simstate::{ProductState, SiteProjectors, StateHandle};

/// One block pair: a threshold search over `2m` lists, then a check of the candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadEstimateAttempt {
    pub search: ThresholdSearch,
    /// `(concept, via complement)` returned by the search.
    pub candidate: Option<(usize, bool)>,
    /// `X/l` of the candidate on the check block.
    pub fraction: Option<f64>,
    pub confirmed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadEstimateSearch {
    /// Confirmed concept, the side its estimate is off on, and its measured fraction.
    pub found: Option<(usize, Direction, f64)>,
    pub attempts: Vec<BadEstimateAttempt>,
}

/// Looks for `c` with `|μ_c − λ_c|` large using at most `pairs` block pairs.
///
/// Each search runs with precision `ε/4` on `Π^{(c)}` at threshold `λ_c + 7ε/4` and on
/// `1 − Π^{(c)}` at `1 − λ_c + 7ε/4`, concept by concept; a returned `c` is confirmed when
/// the next block gives `|X/l − λ_c| > ε`.
pub fn search_bad_estimate(
    inst: &CellInstance,
    blocks: &mut BlockSource,
    lambdas: &[f64],
    pairs: u64,
    cfg: &AlgorithmConfig,
    rng: &mut StreamRng,
) -> Result<BadEstimateSearch, AlgorithmError> {
    let m = inst.concept_count();
    if lambdas.len() != m {
        return Err(AlgorithmError::LengthMismatch { expected: m as u64, got: lambdas.len() as u64 });
    }
    let eps = cfg.eps;
    let mut attempts = Vec::new();
    for _ in 0..pairs {
        if blocks.remaining() < 2 {
            break;
        }
        let search_block = blocks.next(rng)?;
        let check_block = blocks.next(rng)?;
        let l = search_block.iter().map(|s| s.1).sum::<u64>();
        let mut list = Vec::with_capacity(2 * m);
        for (c, &lam) in lambdas.iter().enumerate() {
            let p = inst.block_projectors(c, &search_block);
            let complement = p.map(|x| x.complement());
            list.push(ThresholdedConcept { projectors: p, theta: lam + 1.75 * eps });
            list.push(ThresholdedConcept { projectors: complement, theta: 1.0 - lam + 1.75 * eps });
        }
        let mut handle = StateHandle::new(inst.block_state(&search_block)?, &cfg.sim)?;
        let search = threshold_search_on(&mut handle, &list, eps / 4.0, cfg.noise_scale, rng)?;
        let Some(j) = search.selected else {
            attempts.push(BadEstimateAttempt { search, candidate: None, fraction: None, confirmed: false });
            continue;
        };
        let c = j / 2;
        let mut h = StateHandle::new(inst.block_state(&check_block)?, &cfg.sim)?;
        let x = h.measure_average(&inst.block_projectors(c, &check_block), rng)?;
        let fraction = x as f64 / l as f64;
        let confirmed = (fraction - lambdas[c]).abs() > eps;
        attempts.push(BadEstimateAttempt {
            search,
            candidate: Some((c, j % 2 == 1)),
            fraction: Some(fraction),
            confirmed,
        });
        if confirmed {
            let dir = if fraction > lambdas[c] { Direction::Plus } else { Direction::Minus };
            return Ok(BadEstimateSearch { found: Some((c, dir, fraction)), attempts });
        }
    }
    Ok(BadEstimateSearch { found: None, attempts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EreRound {
    /// Estimator predictions the round searched against.
    pub lambdas: Vec<f64>,
    pub search: BadEstimateSearch,
    pub update: Option<PostSelection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EreReport {
    /// Final `μ̂_c` for every concept.
    pub estimates: Vec<f64>,
    pub rounds: Vec<EreRound>,
    /// Stopped because a search found no bad estimate.
    pub converged: bool,
    /// Stopped because a confirmed update had zero probability under the estimator.
    pub stalled: bool,
    pub schedule: Schedule,
    pub advisory: SizingAdvisory,
    pub blocks_used: u64,
}

impl EreReport {
    pub fn updates(&self) -> usize {
        self.rounds.iter().filter(|r| r.update.is_some()).count()
    }
}

/// Estimates `μ_c` for every concept within `2ε`, with at most `cfg.t_rounds` updates.
pub fn ere_shadow(
    state: &ProductState,
    concepts: &[SiteProjectors],
    cfg: &AlgorithmConfig,
    rng: &mut StreamRng,
) -> Result<EreReport, AlgorithmError> {
    cfg.validate()?;
    let inst = CellInstance::new(state, concepts, &cfg.sim)?;
    ere_on_instance(&inst, cfg, rng)
}

pub(crate) fn ere_on_instance(
    inst: &CellInstance,
    cfg: &AlgorithmConfig,
    rng: &mut StreamRng,
) -> Result<EreReport, AlgorithmError> {
    let schedule = cfg.schedule(inst.n(), cfg.t_rounds)?;
    let advisory = cfg.advisory(2 * inst.concept_count(), schedule.len, cfg.eps / 4.0);
    let mut est = EstimatorState::from_instance(inst, cfg)?;
    let mut blocks = BlockSource::new(inst.cell_lens(), schedule.len, schedule.blocks);
    let mut rounds = Vec::new();
    let (mut converged, mut stalled) = (false, false);
    for _ in 0..schedule.rounds {
        let lambdas = est.predictions();
        let search = search_bad_estimate(inst, &mut blocks, &lambdas, schedule.k, cfg, rng)?;
        let Some((c, dir, _)) = search.found else {
            rounds.push(EreRound { lambdas, search, update: None });
            converged = true;
            break;
        };
        match update_estimator(&mut est, c, dir, lambdas[c], cfg.eps) {
            Ok(ev) => rounds.push(EreRound { lambdas, search, update: Some(ev) }),
            Err(AlgorithmError::ZeroProbability { .. }) => {
                rounds.push(EreRound { lambdas, search, update: None });
                stalled = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(EreReport {
        estimates: est.predictions(),
        rounds,
        converged,
        stalled,
        schedule,
        advisory,
        blocks_used: blocks.used(),
    })
}
