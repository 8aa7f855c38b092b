//! Hypothesis selection among state-valued candidates via Helstrom projectors.
//!
//! For each pair `i < j`, `A_ij(s)` projects onto the positive part of
//! `σ_i(s) − σ_j(s)`. With `μ_ij` the acceptance of `A_ij` on the data and
//! `ν_kij` its acceptance on candidate `k`, the winner minimizes
//! `Δ_k = max_{i<j} |ν_kij − μ_ij|`, which is within `3η` of the best candidate
//! in average trace distance when `μ_ij` is exact.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ere::{ere_on_instance, EreReport};
use super::{AlgorithmConfig, AlgorithmError, CellInstance};
use crate::qcore::{helstrom_projector, trace_distance, DensityMatrix};
use crate::rng::StreamRng;
use crate::simstate::{common_refinement, ProductState, Runs, SiteProjectors};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MuSource {
    /// `μ_ij` computed from the true site states (oracle).
    Exact,
    /// `μ_ij` from risk estimation on the data.
    Estimated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selected: usize,
    /// `Δ_k` for every candidate.
    pub deltas: Vec<f64>,
    /// Pairs `(i, j)`, `i < j`, in the order of `mu` and the columns of `nu`.
    pub pairs: Vec<(usize, usize)>,
    pub mu: Vec<f64>,
    /// `nu[k][p]` for candidate `k` and pair `p`.
    pub nu: Vec<Vec<f64>>,
    pub ere: Option<EreReport>,
}

/// Picks `k* = argmin_k Δ_k` (lowest index on ties).
///
/// Each hypothesis lists the candidate's state at every site of `state`.
pub fn hypothesis_selection(
    state: &ProductState,
    hypotheses: &[Runs<DensityMatrix>],
    mu_source: MuSource,
    cfg: &AlgorithmConfig,
    rng: &mut StreamRng,
) -> Result<SelectionReport, AlgorithmError> {
    cfg.validate()?;
    let m = hypotheses.len();
    if m == 0 {
        return Err(AlgorithmError::EmptyClass);
    }
    let n = state.n();
    for h in hypotheses {
        if h.len() != n {
            return Err(AlgorithmError::LengthMismatch { expected: n, got: h.len() });
        }
        if let Some(bad) = h.values().find(|s| s.dim() != state.dim()) {
            return Err(AlgorithmError::Dimension { expected: state.dim(), got: bad.dim() });
        }
    }
    if m == 1 {
        return Ok(SelectionReport {
            selected: 0,
            deltas: alloc::vec![0.0],
            pairs: Vec::new(),
            mu: Vec::new(),
            nu: alloc::vec![Vec::new()],
            ere: None,
        });
    }

    let cells = common_refinement(n, hypotheses.iter().flat_map(|h| h.ends()).collect::<Vec<_>>());
    let lens: Vec<u64> = cells.iter().map(|c| c.len).collect();
    let sigma: Vec<Vec<DensityMatrix>> =
        hypotheses.iter().map(|h| h.locate(&cells).into_iter().map(|i| h.runs()[i].0.clone()).collect()).collect();

    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let mut lists: Vec<SiteProjectors> = Vec::with_capacity(pairs.len());
    let mut nu = alloc::vec![Vec::with_capacity(pairs.len()); m];
    for &(i, j) in &pairs {
        let a =
            sigma[i].iter().zip(&sigma[j]).map(|(si, sj)| helstrom_projector(si, sj)).collect::<Result<Vec<_>, _>>()?;
        for (k, row) in nu.iter_mut().enumerate() {
            let mut acc = 0.0;
            for ((s, p), &len) in sigma[k].iter().zip(&a).zip(&lens) {
                acc += len as f64 * s.probability(p)?;
            }
            row.push(acc / n as f64);
        }
        lists.push(Runs::from_runs(a.into_iter().zip(lens.iter().copied()).collect()));
    }

    let inst = CellInstance::new(state, &lists, &cfg.sim)?;
    let (mu, ere) = match mu_source {
        MuSource::Exact => (inst.true_means()?, None),
        MuSource::Estimated => {
            let report = ere_on_instance(&inst, cfg, rng)?;
            (report.estimates.clone(), Some(report))
        }
    };
    let deltas: Vec<f64> =
        nu.iter().map(|row| row.iter().zip(&mu).map(|(v, u)| (v - u).abs()).fold(0.0, f64::max)).collect();
    let selected = deltas.iter().enumerate().fold(0, |best, (k, d)| if *d < deltas[best] { k } else { best });
    Ok(SelectionReport { selected, deltas, pairs, mu, nu, ere })
}

/// `(1/n) Σ_s d_tr(σ(s), ρ_s)`. Oracle quantity for validating a selection.
pub fn average_trace_distance(state: &ProductState, hypothesis: &Runs<DensityMatrix>) -> Result<f64, AlgorithmError> {
    let n = state.n();
    if hypothesis.len() != n {
        return Err(AlgorithmError::LengthMismatch { expected: n, got: hypothesis.len() });
    }
    let cells = common_refinement(n, state.sites().ends().chain(hypothesis.ends()).collect::<Vec<_>>());
    let (si, hi) = (state.sites().locate(&cells), hypothesis.locate(&cells));
    let mut acc = 0.0;
    for ((cell, a), b) in cells.iter().zip(si).zip(hi) {
        acc += cell.len as f64 * trace_distance(&state.sites().runs()[a].0, &hypothesis.runs()[b].0)?;
    }
    Ok(acc / n as f64)
}
