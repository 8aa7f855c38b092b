//! Trace-level invariants of the measurement procedures.

use cqlearn_core::algorithms::{
    average_trace_distance, ere_shadow, erm_projector, hypothesis_selection, threshold_search, AlgorithmConfig,
    MuSource, ThresholdedConcept,
};
use cqlearn_core::qcore::random::{random_density, random_simplex};
use cqlearn_core::qcore::{DensityMatrix, Projector};
use cqlearn_core::simstate::{Backend, ProductState, Runs, SimConfig, SiteProjectors};
use cqlearn_core::StreamRng;
use proptest::prelude::*;
use rand::Rng;

fn diag_state(p: &[f64], n: u64) -> ProductState {
    ProductState::new(Runs::uniform(DensityMatrix::diagonal(p).unwrap(), n), Backend::Commuting, &SimConfig::default())
        .unwrap()
}

fn random_masks(m: usize, d: usize, n: u64, rng: &mut StreamRng) -> Vec<SiteProjectors> {
    (0..m)
        .map(|_| Runs::uniform(Projector::from_mask(&(0..d).map(|_| rng.random()).collect::<Vec<bool>>()), n))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn selected_concept_has_positive_acceptance(seed in any::<u64>(), m in 1usize..6) {
        let mut rng = StreamRng::new(seed, 0);
        let p = random_simplex(3, &mut rng);
        let list: Vec<ThresholdedConcept> = random_masks(m, 3, 400, &mut rng)
            .into_iter()
            .map(|projectors| ThresholdedConcept { projectors, theta: rng.random_range(0.0..1.0) })
            .collect();
        let cfg = AlgorithmConfig { seed, ..AlgorithmConfig::default() };
        let out = threshold_search(diag_state(&p, 400), &list, &cfg, &mut rng).unwrap();
        if let Some(c) = out.selected {
            let step = out.steps.iter().find(|s| s.concept == c).unwrap();
            prop_assert!(step.accepted && step.p_accept > 0.0);
        }
        prop_assert!(out.steps.iter().rev().skip(1).all(|s| !s.accepted));
    }

    #[test]
    fn ere_respects_round_cap_and_strictly_post_selects(seed in any::<u64>(), m in 1usize..4) {
        let mut rng = StreamRng::new(seed, 1);
        let p = random_simplex(2, &mut rng);
        let cfg = AlgorithmConfig { t_rounds: 4, k_repeats: Some(4), block_len: Some(100), ..AlgorithmConfig::default() };
        let n = 6 * 4 * 4 * 100;
        let rep = ere_shadow(&diag_state(&p, n), &random_masks(m, 2, n, &mut rng), &cfg, &mut rng).unwrap();
        prop_assert!(rep.updates() as u64 <= cfg.t_rounds);
        for r in &rep.rounds {
            if let Some(u) = &r.update {
                prop_assert!(u.probability > 0.0 && u.probability < 1.0);
            }
        }
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>()) {
        let mut rng = StreamRng::new(seed, 2);
        let p = random_simplex(3, &mut rng);
        let masks = random_masks(3, 3, 1104 * 20, &mut rng);
        let state = diag_state(&p, 1104 * 20);
        let cfg = AlgorithmConfig { seed, ..AlgorithmConfig::default() };
        let a = erm_projector(&state, &masks, &cfg, &mut cfg.rng()).unwrap();
        let b = erm_projector(&state, &masks, &cfg, &mut cfg.rng()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exact_selection_is_within_three_eta(seed in any::<u64>(), m in 2usize..5) {
        let mut rng = StreamRng::new(seed, 3);
        let rho = random_density(2, 2, &mut rng);
        let state = ProductState::new(Runs::uniform(rho, 10), Backend::Dense, &SimConfig::default()).unwrap();
        let hyps: Vec<Runs<DensityMatrix>> = (0..m).map(|_| Runs::uniform(random_density(2, 2, &mut rng), 10)).collect();
        let cfg = AlgorithmConfig::default();
        let rep = hypothesis_selection(&state, &hyps, MuSource::Exact, &cfg, &mut rng).unwrap();
        let dists: Vec<f64> = hyps.iter().map(|h| average_trace_distance(&state, h).unwrap()).collect();
        let eta = dists.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(dists[rep.selected] <= 3.0 * eta + 1e-9);
    }
}
