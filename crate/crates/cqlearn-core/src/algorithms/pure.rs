//! Maximum-likelihood learning of a pure-state-valued class from single copies,
//! each measured in its own Haar-random orthonormal basis.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AlgorithmError;
use crate::concepts::{ConceptKind, ConceptRef, Label};
use crate::qcore::random::haar_unitary;
use crate::qcore::{ComplexMatrix, DensityMatrix, C64};
use crate::rng::StreamRng;

/// Likelihoods below this count as zero.
const LIKELIHOOD_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureLearnerReport {
    pub selected: usize,
    /// `Σᵢ ln ⟨u_{zᵢ}| c(xᵢ) |u_{zᵢ}⟩` per concept; `-inf` when some factor vanishes.
    pub log_likelihoods: Vec<f64>,
    /// Every concept had zero likelihood, which the realizable promise rules out
    /// almost surely; `selected` is then 0.
    pub all_zero: bool,
    pub outcomes: Vec<usize>,
}

/// `⟨u|ρ|u⟩` for column `z` of `u`.
fn basis_probability(rho: &ComplexMatrix, u: &ComplexMatrix, z: usize) -> f64 {
    let d = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        let ui = u[(i, z)].conj();
        for j in 0..d {
            acc += ui * rho[(i, j)] * u[(j, z)];
        }
    }
    acc.re.max(0.0)
}

pub fn pure_state_realizable_learner(
    data: &[(Label, DensityMatrix)],
    class: &[ConceptRef],
    rng: &mut StreamRng,
) -> Result<PureLearnerReport, AlgorithmError> {
    if class.is_empty() {
        return Err(AlgorithmError::EmptyClass);
    }
    for c in class {
        if c.kind() != ConceptKind::State {
            return Err(
                crate::concepts::ConceptError::KindMismatch { expected: ConceptKind::State, got: c.kind() }.into()
            );
        }
    }
    let mut log_likelihoods = alloc::vec![0.0; class.len()];
    let mut outcomes = Vec::with_capacity(data.len());
    for (x, rho) in data {
        let d = rho.dim();
        let u = haar_unitary(d, rng);
        let u_draw: f64 = rng.random();
        let mut cum = 0.0;
        let mut z = d - 1;
        for k in 0..d {
            cum += basis_probability(rho.matrix(), &u, k);
            if u_draw < cum {
                z = k;
                break;
            }
        }
        outcomes.push(z);
        for (ll, c) in log_likelihoods.iter_mut().zip(class) {
            let sigma = c.eval_state(x)?;
            if sigma.dim() != d {
                return Err(AlgorithmError::Dimension { expected: d, got: sigma.dim() });
            }
            let p = basis_probability(sigma.matrix(), &u, z);
            *ll += if p > LIKELIHOOD_FLOOR { p.ln() } else { f64::NEG_INFINITY };
        }
    }
    let all_zero = log_likelihoods.iter().all(|l| *l == f64::NEG_INFINITY);
    let selected =
        log_likelihoods.iter().enumerate().fold(0, |best, (k, l)| if *l > log_likelihoods[best] { k } else { best });
    Ok(PureLearnerReport { selected, log_likelihoods, all_zero, outcomes })
}
