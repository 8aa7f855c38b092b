use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;

use super::*;
use crate::pbnoise::{bhattacharyya, conditional_pmf_reject, pb_pmf, smoothed_tail};
use crate::qcore::random::{random_density, random_projector};
use crate::qcore::{fidelity, trace_distance};
use crate::rng::StreamRng;

fn cfg() -> SimConfig {
    SimConfig { particles: 40_000, ..SimConfig::default() }
}

fn uniform(p: Projector, n: u64) -> SiteProjectors {
    Runs::uniform(p, n)
}

fn random_instance(rng: &mut StreamRng, n: usize) -> (ProductState, SiteProjectors) {
    let sites: Vec<DensityMatrix> = (0..n).map(|_| random_density(2, 1 + rng.random_range(0..2), rng)).collect();
    let projs: Vec<Projector> = (0..n).map(|_| random_projector(2, 1, rng)).collect();
    let state = ProductState::from_sites(sites, Backend::Dense, &cfg()).unwrap();
    (state, Runs::from_sites(projs))
}

fn diagonal_instance(rng: &mut StreamRng, n: usize, backend: Backend) -> (ProductState, Vec<SiteProjectors>) {
    let sites: Vec<DensityMatrix> = (0..n)
        .map(|_| {
            let p = rng.random_range(0.05..0.95);
            DensityMatrix::diagonal(&[p, 1.0 - p]).unwrap()
        })
        .collect();
    let lists = (0..3)
        .map(|_| Runs::from_sites((0..n).map(|_| Projector::basis_subset(2, &[rng.random_range(0..2)])).collect()))
        .collect();
    (ProductState::from_sites(sites, backend, &cfg()).unwrap(), lists)
}

#[test]
fn noise_rate_from_scale() {
    let ev = build_gentle_event(uniform(Projector::identity(2), 16), 0.5, 4.0).unwrap();
    assert_eq!(ev.lambda(), 1.0 / 16.0);
    let ev = build_gentle_event(uniform(Projector::identity(2), 100), 0.5, 4.0).unwrap();
    assert!((ev.lambda() - 0.025).abs() < 1e-15);
    assert_eq!(build_gentle_event(uniform(Projector::identity(2), 1), 0.5, 1.0), Err(SimError::BadLambda(1.0)));
}

#[test]
fn identity_projectors_always_accept() {
    let mut rng = StreamRng::new(1, 0);
    let (state, _) = random_instance(&mut rng, 3);
    let h = StateHandle::new(state, &cfg()).unwrap();
    let ev = GentleEvent::new(uniform(Projector::identity(2), 3), 0.9, 0.3).unwrap();
    assert!((h.expect_event(&ev, &mut rng).unwrap().value - 1.0).abs() < 1e-14);
}

#[test]
fn zero_projectors_give_noise_tail() {
    let mut rng = StreamRng::new(2, 0);
    let state = ProductState::from_sites(vec![DensityMatrix::maximally_mixed(2)], Backend::Dense, &cfg()).unwrap();
    let h = StateHandle::new(state, &cfg()).unwrap();
    let ev = GentleEvent::new(uniform(Projector::zero(2), 1), 1.0, 0.5).unwrap();
    // T ≡ 0, so E[B] = e^{−λθn}
    assert!((h.expect_event(&ev, &mut rng).unwrap().value - (-0.5f64).exp()).abs() < 1e-15);
}

#[test]
fn dense_expectation_matches_poisson_binomial() {
    let mut rng = StreamRng::new(3, 0);
    for _ in 0..50 {
        let (state, projs) = random_instance(&mut rng, 4);
        let probs = state.acceptance_probabilities(&projs).unwrap().expand();
        let theta = rng.random_range(0.0..1.0);
        let ev = GentleEvent::new(projs, theta, rng.random_range(0.05..0.95)).unwrap();
        let oracle = smoothed_tail(&pb_pmf(&probs).unwrap(), ev.noise(), ev.count_threshold());
        let h = StateHandle::new(state, &cfg()).unwrap();
        assert!((h.expect_event(&ev, &mut rng).unwrap().value - oracle).abs() < 1e-10);
    }
}

#[test]
fn nonpositive_threshold_always_accepts() {
    let mut rng = StreamRng::new(4, 0);
    let (state, projs) = random_instance(&mut rng, 3);
    let before = state.dense_matrix(&cfg()).unwrap();
    let ev = GentleEvent::new(projs, -0.1, 0.5).unwrap();
    let mut h = StateHandle::new(state, &cfg()).unwrap();
    let out = h.measure_event(&ev, &mut rng).unwrap();
    assert!(out.accepted);
    assert_eq!(out.p_accept, 1.0);
    // B = 1 on every block, so the state is unchanged
    let after = h.dense_state().unwrap();
    assert!((after.matrix() - before.matrix()).max_abs() < 1e-12);
}

#[test]
fn eigenstate_reject_branch_is_unchanged() {
    let sites = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1), DensityMatrix::basis(2, 0)];
    let state = ProductState::from_sites(sites, Backend::Dense, &cfg()).unwrap();
    let before = state.dense_matrix(&cfg()).unwrap();
    let ev = GentleEvent::new(uniform(Projector::basis_subset(2, &[0]), 3), 0.9, 0.4).unwrap();
    let mut h = StateHandle::new(state, &cfg()).unwrap();
    let p = h.post_select(&ev, false).unwrap();
    // T = 2 deterministically: reject probability 1 − e^{−λ(2.7−2)}
    assert!((p - (1.0 - (-0.4f64 * 0.7).exp())).abs() < 1e-12);
    assert!((h.dense_state().unwrap().matrix() - before.matrix()).max_abs() < 1e-12);
}

#[test]
fn reject_branch_fidelity_is_bhattacharyya() {
    let mut rng = StreamRng::new(5, 0);
    for _ in 0..30 {
        let (state, projs) = random_instance(&mut rng, 3);
        let probs = state.acceptance_probabilities(&projs).unwrap().expand();
        let ev = GentleEvent::new(projs, rng.random_range(0.3..1.0), rng.random_range(0.1..0.9)).unwrap();
        let pb = pb_pmf(&probs).unwrap();
        let cond = conditional_pmf_reject(&pb, ev.noise(), ev.count_threshold()).unwrap();
        let bc = bhattacharyya(&cond, pb.pmf()).unwrap();
        let rho = state.dense_matrix(&cfg()).unwrap();
        let mut h = StateHandle::new(state, &cfg()).unwrap();
        h.post_select(&ev, false).unwrap();
        let f = fidelity(&rho, &h.dense_state().unwrap()).unwrap();
        assert!((f - bc).abs() < 1e-8, "F = {f}, BC = {bc}");
    }
}

#[test]
fn average_measurement_examples() {
    let mut rng = StreamRng::new(6, 0);
    let n = 5;
    let state = ProductState::new(Runs::uniform(DensityMatrix::basis(2, 0), n), Backend::Dense, &cfg()).unwrap();
    let mut h = StateHandle::new(state, &cfg()).unwrap();
    assert_eq!(h.measure_average(&uniform(Projector::basis_subset(2, &[0]), n), &mut rng).unwrap(), n);
    assert!(h.is_consumed());
    assert_eq!(h.measure_average(&uniform(Projector::identity(2), n), &mut rng), Err(SimError::Consumed));

    let mixed = ProductState::new(Runs::uniform(DensityMatrix::maximally_mixed(2), 4), Backend::Dense, &cfg()).unwrap();
    let proj = uniform(Projector::basis_subset(2, &[1]), 4);
    let trials = 4000;
    let total: u64 = (0..trials)
        .map(|_| StateHandle::new(mixed.clone(), &cfg()).unwrap().measure_average(&proj, &mut rng).unwrap())
        .sum();
    let mean = total as f64 / trials as f64;
    // sd of the mean = 1/√4000 ≈ 0.016
    assert!((mean - 2.0).abs() < 0.08, "{mean}");
}

#[test]
fn commuting_backend_rejects_offdiagonal() {
    let plus = DensityMatrix::pure(&[crate::qcore::C64::new(1.0, 0.0), crate::qcore::C64::new(1.0, 0.0)]);
    assert!(matches!(
        ProductState::from_sites(vec![plus.clone()], Backend::Commuting, &cfg()),
        Err(SimError::NotDiagonal { .. })
    ));
    let state = ProductState::from_sites(vec![DensityMatrix::basis(2, 0); 2], Backend::Commuting, &cfg()).unwrap();
    let h = StateHandle::new(state, &cfg()).unwrap();
    let proj = Projector::new(plus.matrix().clone()).unwrap();
    let ev = GentleEvent::new(uniform(proj, 2), 0.5, 0.5).unwrap();
    let mut rng = StreamRng::new(7, 0);
    assert!(matches!(h.expect_event(&ev, &mut rng), Err(SimError::NotDiagonal { .. })));
}

#[test]
fn dense_cap_is_enforced() {
    let small = SimConfig { dense_qubit_cap: 3, ..cfg() };
    let sites = vec![DensityMatrix::basis(2, 0); 4];
    assert!(matches!(ProductState::from_sites(sites, Backend::Dense, &small), Err(SimError::DenseCapExceeded { .. })));
}

#[test]
fn commuting_fresh_acceptance_frequency() {
    let mut rng = StreamRng::new(8, 0);
    let (state, lists) = diagonal_instance(&mut rng, 6, Backend::Commuting);
    let ev = GentleEvent::new(lists[0].clone(), 0.5, 0.3).unwrap();
    let exact = StateHandle::new(state.clone(), &cfg()).unwrap().expect_event(&ev, &mut rng).unwrap().value;
    let trials = 20_000;
    let hits = (0..trials)
        .filter(|_| StateHandle::new(state.clone(), &cfg()).unwrap().measure_event(&ev, &mut rng).unwrap().accepted)
        .count();
    let freq = hits as f64 / trials as f64;
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((freq - exact).abs() < 4.0 * se, "freq {freq} exact {exact}");
}

fn dense_after_rejections(state: &ProductState, events: &[GentleEvent], query: &GentleEvent) -> f64 {
    let dense = ProductState::new(state.sites().clone(), Backend::Dense, &cfg()).unwrap();
    let mut h = StateHandle::new(dense, &cfg()).unwrap();
    for ev in events {
        h.post_select(ev, false).unwrap();
    }
    let mut rng = StreamRng::new(0, 0);
    h.expect_event(query, &mut rng).unwrap().value
}

#[test]
fn particles_match_dense_after_rejections() {
    let mut rng = StreamRng::new(9, 0);
    for (n, rejected) in [(4usize, 1usize), (6, 2)] {
        let (state, lists) = diagonal_instance(&mut rng, n, Backend::Commuting);
        let events: Vec<GentleEvent> =
            lists[..rejected].iter().map(|l| GentleEvent::new(l.clone(), 0.4, 0.6).unwrap()).collect();
        let query = GentleEvent::new(lists[2].clone(), 0.5, 0.5).unwrap();
        let oracle = dense_after_rejections(&state, &events, &query);
        let h = commuting_evolved_state(&state, &events, &cfg()).unwrap();
        let est = h.particle_estimate(&query, &mut rng).unwrap();
        assert!((est.mean - oracle).abs() <= 3.0 * est.std_error, "n={n}: {est:?} vs {oracle}");
    }
}

#[test]
fn no_rejections_reduce_to_product_sampling() {
    let mut rng = StreamRng::new(10, 0);
    let (state, lists) = diagonal_instance(&mut rng, 5, Backend::Commuting);
    let query = GentleEvent::new(lists[0].clone(), 0.5, 0.5).unwrap();
    let h = commuting_evolved_state(&state, &[], &cfg()).unwrap();
    let est = h.particle_estimate(&query, &mut rng).unwrap();
    assert_eq!(est.resamples, 0);
    assert!((est.ess - est.particles as f64).abs() < 1e-6);
    let exact = h.expect_event(&query, &mut rng).unwrap().value;
    assert!((est.mean - exact).abs() <= 3.0 * est.std_error);
}

#[test]
fn commuting_sequential_outcomes_follow_dense_law() {
    // Two gentle measurements in a row: the joint outcome law must match the dense oracle.
    let mut rng = StreamRng::new(12, 0);
    let (state, lists) = diagonal_instance(&mut rng, 4, Backend::Commuting);
    let e1 = GentleEvent::new(lists[0].clone(), 0.5, 0.7).unwrap();
    let e2 = GentleEvent::new(lists[1].clone(), 0.5, 0.7).unwrap();
    let dense = ProductState::new(state.sites().clone(), Backend::Dense, &cfg()).unwrap();
    let mut oracle = StateHandle::new(dense, &cfg()).unwrap();
    let p_rej = oracle.post_select(&e1, false).unwrap();
    let p_acc2 = oracle.expect_event(&e2, &mut rng).unwrap().value;
    let target = p_rej * p_acc2;

    let trials = 20_000;
    let hits = (0..trials)
        .filter(|_| {
            let mut h = StateHandle::new(state.clone(), &cfg()).unwrap();
            !h.measure_event(&e1, &mut rng).unwrap().accepted && h.measure_event(&e2, &mut rng).unwrap().accepted
        })
        .count();
    let freq = hits as f64 / trials as f64;
    let se = (target * (1.0 - target) / trials as f64).sqrt();
    assert!((freq - target).abs() < 4.0 * se, "freq {freq} target {target}");
}

#[test]
fn post_selection_moves_state_by_trace_distance() {
    let mut rng = StreamRng::new(13, 0);
    let (state, projs) = random_instance(&mut rng, 2);
    let rho = state.dense_matrix(&cfg()).unwrap();
    let ev = GentleEvent::new(projs, 0.5, 0.5).unwrap();
    let mut h = StateHandle::new(state, &cfg()).unwrap();
    h.post_select(&ev, true).unwrap();
    let after = h.dense_state().unwrap();
    assert!(DensityMatrix::new(after.matrix().clone()).is_ok());
    assert!(trace_distance(&rho, &after).unwrap() >= 0.0);
}
