//! The registered experiments and helpers they share.

mod concentration;
mod covering;
mod ere;
mod erm;
mod learning;
mod lemmas;
mod pb;
mod pure;
mod selection;
mod threshold;

use cqlearn_core::qcore::DensityMatrix;
use cqlearn_core::simstate::Runs;
use cqlearn_core::StreamRng;
use rand::Rng;

use crate::registry::Experiment;

pub static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "pb_exactness",
        anchor: "exact Poisson-binomial count law against binomial and enumeration oracles",
        default_trials: 5,
        run: pb::pb_exactness,
    },
    Experiment {
        name: "gentle_event_faithfulness",
        anchor: "gentle event acceptance equals the smoothed count tail; reject-branch fidelity equals a Bhattacharyya coefficient",
        default_trials: 500,
        run: pb::gentle_event_faithfulness,
    },
    Experiment {
        name: "exponential_tail_bound",
        anchor: "exponential upper bound on the smoothed acceptance probability",
        default_trials: 10_000,
        run: pb::exponential_tail_bound,
    },
    Experiment {
        name: "pb_gentleness",
        anchor: "gentle classical measurement: chi-squared disturbance of the rejected count law",
        default_trials: 10_000,
        run: pb::pb_gentleness,
    },
    Experiment {
        name: "threshold_search_success",
        anchor: "threshold search on non-identical product states under the promise",
        default_trials: 2000,
        run: threshold::threshold_search_success,
    },
    Experiment {
        name: "erm_convergence",
        anchor: "empirical risk minimization by binary search over acceptance thresholds",
        default_trials: 200,
        run: erm::erm_convergence,
    },
    Experiment {
        name: "ere_dense_update",
        anchor: "risk estimation by post-selected updates of a multi-copy estimator",
        default_trials: 200,
        run: ere::ere_dense_update,
    },
    Experiment {
        name: "hypothesis_selection",
        anchor: "hypothesis selection among state-valued concepts by pairwise Helstrom tests",
        default_trials: 100,
        run: selection::hypothesis_selection,
    },
    Experiment {
        name: "matrix_lemmas",
        anchor: "Helstrom identity and matrix perturbation inequalities",
        default_trials: 1000,
        run: lemmas::matrix_lemmas,
    },
    Experiment {
        name: "batch_concentration",
        anchor: "concentration of batch means drawn without replacement",
        default_trials: 10_000,
        run: concentration::batch_concentration,
    },
    Experiment {
        name: "covering_bounds",
        anchor: "covering-number calculators and greedy empirical nets",
        default_trials: 50,
        run: covering::covering_bounds,
    },
    Experiment {
        name: "pure_state_learner",
        anchor: "maximum-likelihood learner for realizable pure-state concept classes",
        default_trials: 500,
        run: pure::pure_state_learner,
    },
    Experiment {
        name: "end_to_end_erm",
        anchor: "end-to-end risk minimization over an empirical net of a two-parameter projector family",
        default_trials: 100,
        run: learning::end_to_end_erm,
    },
    Experiment {
        name: "uniform_convergence",
        anchor: "uniform convergence of empirical risks over a finite class",
        default_trials: 400,
        run: learning::uniform_convergence,
    },
    Experiment {
        name: "sample_complexity_slope",
        anchor: "required sample size versus precision on a log-log scale",
        default_trials: 1,
        run: learning::sample_complexity_slope,
    },
];

/// Integer drawn log-uniformly from `[lo, hi]`, so small sizes are as common as large ones.
pub(crate) fn log_uniform(lo: u64, hi: u64, rng: &mut StreamRng) -> u64 {
    let (a, b) = ((lo as f64).ln(), ((hi + 1) as f64).ln());
    (rng.random_range(a..b).exp().floor() as u64).clamp(lo, hi)
}

/// Success probabilities from a mix of shapes: uniform, skewed to the edges, clustered.
pub(crate) fn random_probs(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    match rng.random_range(0..4u8) {
        0 => (0..n).map(|_| rng.random::<f64>()).collect(),
        1 => (0..n).map(|_| rng.random::<f64>().powi(4)).collect(),
        2 => (0..n).map(|_| 1.0 - rng.random::<f64>().powi(4)).collect(),
        _ => {
            let c = rng.random::<f64>();
            (0..n).map(|_| (c + 0.05 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0)).collect()
        }
    }
}

/// Splits `n` into `parts` positive lengths with random proportions.
pub(crate) fn random_split(n: u64, parts: usize, rng: &mut StreamRng) -> Vec<u64> {
    assert!(parts >= 1 && n >= parts as u64);
    let w: Vec<f64> = (0..parts).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = w.iter().sum();
    let mut lens: Vec<u64> = w.iter().map(|x| ((x / total) * n as f64).floor().max(1.0) as u64).collect();
    let assigned: u64 = lens.iter().sum();
    // floors leave a remainder; the first cell absorbs it (or gives back any excess)
    lens[0] = (lens[0] + n).checked_sub(assigned).filter(|&l| l > 0).unwrap_or(1);
    debug_assert_eq!(lens.iter().sum::<u64>(), n);
    lens
}

/// Runs with the given lengths and per-run values.
pub(crate) fn runs_of<T: Clone + PartialEq>(values: &[T], lens: &[u64]) -> Runs<T> {
    Runs::from_runs(values.iter().cloned().zip(lens.iter().copied()).collect())
}

/// Diagonal qubit state `diag(p, 1 − p)`.
pub(crate) fn diag_qubit(p: f64) -> DensityMatrix {
    DensityMatrix::diagonal(&[p, 1.0 - p]).expect("a probability vector")
}

/// Fraction of `true` entries.
pub(crate) fn rate(flags: impl IntoIterator<Item = bool>) -> f64 {
    let (hits, total) = flags.into_iter().fold((0u64, 0u64), |(h, t), f| (h + u64::from(f), t + 1));
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_exact_and_positive() {
        let mut rng = StreamRng::new(1, 0);
        for (n, parts) in [(10, 3), (2, 2), (1_000_000, 4), (7, 1)] {
            let lens = random_split(n, parts, &mut rng);
            assert_eq!(lens.len(), parts);
            assert_eq!(lens.iter().sum::<u64>(), n);
            assert!(lens.iter().all(|&l| l > 0));
        }
    }

    #[test]
    fn log_uniform_stays_in_range() {
        let mut rng = StreamRng::new(2, 0);
        let draws: Vec<u64> = (0..1000).map(|_| log_uniform(1, 2000, &mut rng)).collect();
        assert!(draws.iter().all(|&n| (1..=2000).contains(&n)));
        assert!(draws.iter().filter(|&&n| n < 45).count() > 300);
    }

    #[test]
    fn probabilities_are_valid() {
        let mut rng = StreamRng::new(3, 0);
        for _ in 0..50 {
            assert!(random_probs(20, &mut rng).iter().all(|p| (0.0..=1.0).contains(p)));
        }
        assert_eq!(rate([true, false, true, true]), 0.75);
    }
}
