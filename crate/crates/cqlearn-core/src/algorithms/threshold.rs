//! Sequential threshold search: measure one gentle event per concept, in input
//! order, on the same state, and stop at the first acceptance.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{AlgorithmConfig, AlgorithmError};
use crate::rng::StreamRng;
use crate::simstate::{build_gentle_event, AcceptKind, ProductState, SiteProjectors, StateHandle};

/// Projector list of one concept with its threshold `θ_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdedConcept {
    pub projectors: SiteProjectors,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStep {
    pub concept: usize,
    /// Threshold the event was built with, `θ_c − ε`.
    pub threshold: f64,
    pub p_accept: f64,
    pub kind: AcceptKind,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    /// First accepted concept; `None` means every event rejected.
    pub selected: Option<usize>,
    pub steps: Vec<ThresholdStep>,
}

/// Builds a fresh handle on `state` and searches with precision `cfg.eps`.
pub fn threshold_search(
    state: ProductState,
    concepts: &[ThresholdedConcept],
    cfg: &AlgorithmConfig,
    rng: &mut StreamRng,
) -> Result<ThresholdSearch, AlgorithmError> {
    cfg.validate()?;
    let mut handle = StateHandle::new(state, &cfg.sim)?;
    threshold_search_on(&mut handle, concepts, cfg.eps, cfg.noise_scale, rng)
}

/// Measures `{B_c, 1 − B_c}` for `c = 1, 2, …` where `B_c` has threshold `θ_c − eps`
/// and noise rate `1/(D√n)`, and returns the first accepted `c`.
pub fn threshold_search_on(
    handle: &mut StateHandle,
    concepts: &[ThresholdedConcept],
    eps: f64,
    noise_scale: f64,
    rng: &mut StreamRng,
) -> Result<ThresholdSearch, AlgorithmError> {
    if !handle.is_fresh() {
        return Err(AlgorithmError::NotFresh);
    }
    if concepts.is_empty() {
        return Err(AlgorithmError::EmptyClass);
    }
    for c in concepts {
        if c.projectors.len() != handle.n() {
            return Err(AlgorithmError::LengthMismatch { expected: handle.n(), got: c.projectors.len() });
        }
    }
    let mut steps = Vec::with_capacity(concepts.len());
    for (idx, c) in concepts.iter().enumerate() {
        let threshold = c.theta - eps;
        let ev = build_gentle_event(c.projectors.clone(), threshold, noise_scale)?;
        let out = handle.measure_event(&ev, rng)?;
        steps.push(ThresholdStep {
            concept: idx,
            threshold,
            p_accept: out.p_accept,
            kind: out.kind,
            accepted: out.accepted,
        });
        if out.accepted {
            return Ok(ThresholdSearch { selected: Some(idx), steps });
        }
    }
    Ok(ThresholdSearch { selected: None, steps })
}
