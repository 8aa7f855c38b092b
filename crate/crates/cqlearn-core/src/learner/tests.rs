use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::concepts::{
    BasisEncoding, ConceptOutput, ConstantConcept, DepolarizedSource, FiniteSource, UniformBoxSource,
};
use crate::qcore::random::random_projector;
use crate::qcore::{DensityMatrix, Projector};

fn bit(b: u8) -> Label {
    Label::Bits(vec![b == 1])
}

fn encoding(kind: ConceptKind) -> ConceptRef {
    Arc::new(BasisEncoding::new(1, kind))
}

fn two_point(realizable: Option<bool>) -> FiniteSource {
    FiniteSource::uniform(vec![bit(0), bit(1)], encoding(ConceptKind::State), realizable).unwrap()
}

fn projector_class() -> ConceptClass {
    ConceptClass::finite(vec![
        Arc::new(ConstantConcept(ConceptOutput::Projector(Projector::basis_subset(2, &[0])))) as ConceptRef,
        encoding(ConceptKind::Projector),
        Arc::new(ConstantConcept(ConceptOutput::Projector(Projector::basis_subset(2, &[1])))),
    ])
    .unwrap()
}

fn state_class() -> ConceptClass {
    ConceptClass::finite(vec![
        Arc::new(ConstantConcept(ConceptOutput::State(DensityMatrix::maximally_mixed(2)))) as ConceptRef,
        encoding(ConceptKind::State),
        Arc::new(ConstantConcept(ConceptOutput::State(DensityMatrix::basis(2, 1)))),
    ])
    .unwrap()
}

fn cfg(seed: u64) -> LearnerConfig {
    let mut c = LearnerConfig { n: 1104 * 60, ..LearnerConfig::default() };
    c.algorithm.seed = seed;
    c
}

fn check_report_invariants(r: &RiskReport) {
    for c in &r.concepts {
        for v in [c.empirical_risk, c.true_risk] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert_eq!(c.generalization_gap, c.true_risk - c.empirical_risk);
        if let (Some(mu), Some(g)) = (c.estimate, c.estimate_gap) {
            assert_eq!(g, (mu - (1.0 - c.true_risk)).abs());
        }
        assert_eq!(c.selected, r.selected == Some(c.index));
    }
}

#[test]
fn point_mass_gives_constant_labels() {
    let src = FiniteSource::uniform(vec![bit(1)], encoding(ConceptKind::State), Some(true)).unwrap();
    let mut rng = StreamRng::new(1, 0);
    let t = draw_training_set(&src, 500, 3, Backend::Commuting, &SimConfig::default(), &mut rng).unwrap();
    assert_eq!(t.labels.runs(), &[(bit(1), 500)]);
    assert_eq!(t.prefix, vec![bit(1); 3]);
    assert_eq!(t.state.n(), 500);
    assert!(matches!(
        draw_training_set(&src, 0, 0, Backend::Commuting, &SimConfig::default(), &mut rng),
        Err(LearnerError::NoSamples)
    ));
}

#[test]
fn two_point_frequency_within_four_sigma() {
    let mut rng = StreamRng::new(2, 0);
    let n = 10_000u64;
    let t =
        draw_training_set(&two_point(Some(true)), n, 0, Backend::Commuting, &SimConfig::default(), &mut rng).unwrap();
    let ones = t.labels.runs().iter().find(|(x, _)| *x == bit(1)).map_or(0, |r| r.1);
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((ones as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    assert_eq!(t.labels.len(), n);
}

#[test]
fn continuous_labels_keep_draw_order() {
    let src = UniformBoxSource::new(
        vec![(0.0, 1.0)],
        Arc::new(ConstantConcept(ConceptOutput::State(DensityMatrix::basis(2, 0)))),
        None,
    )
    .unwrap();
    let mut rng = StreamRng::new(3, 0);
    let t = draw_training_set(&src, 10, 5, Backend::Dense, &SimConfig::default(), &mut rng).unwrap();
    assert_eq!(t.labels.len(), 10);
    assert_eq!(t.prefix.as_slice(), &t.labels.expand()[..5]);
}

#[test]
fn realizable_erm_meets_target() {
    let r = learn_projector_class(&two_point(Some(true)), &projector_class(), &cfg(4)).unwrap();
    check_report_invariants(&r);
    assert_eq!(r.net_size, 3);
    assert_eq!(r.inf_risk_basis, InfRiskBasis::Realizable);
    assert_eq!(r.selected, Some(1));
    assert!(r.success);
    assert!((r.target - 0.7).abs() < 1e-12);
}

#[test]
fn agnostic_erm_uses_class_minimum() {
    let src = DepolarizedSource::new(two_point(None), 0.2).unwrap();
    let r = learn_projector_class(&src, &projector_class(), &cfg(5)).unwrap();
    check_report_invariants(&r);
    assert_eq!(r.inf_risk_basis, InfRiskBasis::ClassMinimum);
    // depolarizing by 0.2 leaves the correct projector accepting 0.9
    assert!((r.inf_risk - 0.1).abs() < 1e-12);
    assert!(r.excess_risk.unwrap() <= 7.0 * 0.1);
}

#[test]
fn prefix_net_matches_full_net() {
    let full = learn_projector_class(&two_point(Some(true)), &projector_class(), &cfg(6)).unwrap();
    let prefixed = learn_projector_class(
        &two_point(Some(true)),
        &projector_class(),
        &LearnerConfig { net_prefix: Some(50), ..cfg(6) },
    )
    .unwrap();
    assert_eq!(prefixed.net_prefix, Some(50));
    assert_eq!(full.net_size, prefixed.net_size);
    assert!(full.success && prefixed.success);
}

#[test]
fn net_cap_reports_required_eps() {
    let c = LearnerConfig { net_cap: 1, ..cfg(7) };
    match learn_projector_class(&two_point(Some(true)), &projector_class(), &c) {
        Err(LearnerError::NetTooLarge { size, cap, required_eps }) => {
            assert_eq!((size, cap), (3, 1));
            assert!(required_eps > c.net_eps());
        }
        other => panic!("expected NetTooLarge, got {other:?}"),
    }
}

#[test]
fn kind_is_checked() {
    assert!(matches!(
        learn_projector_class(&two_point(Some(true)), &state_class(), &cfg(8)),
        Err(LearnerError::WrongKind { .. })
    ));
    assert!(matches!(
        learn_state_class(&two_point(Some(true)), &projector_class(), &cfg(8)),
        Err(LearnerError::WrongKind { .. })
    ));
}

#[test]
fn shadow_estimates_every_member() {
    // ten rounds with k = 144 pairs each: blocks of 200 sites need n = 6·10·144·200
    let r = shadow_cq(&two_point(Some(true)), &projector_class(), &LearnerConfig { n: 8640 * 200, ..cfg(9) }).unwrap();
    check_report_invariants(&r);
    assert!(r.concepts.iter().all(|c| c.estimate.is_some()));
    assert!(r.max_estimate_gap.unwrap() <= 0.3, "{:?}", r.max_estimate_gap);
    assert!(r.success);
}

#[test]
fn state_selection_exact_and_estimated() {
    for mu_source in [MuSource::Exact, MuSource::Estimated] {
        let r =
            learn_state_class(&two_point(Some(true)), &state_class(), &LearnerConfig { mu_source, ..cfg(10) }).unwrap();
        check_report_invariants(&r);
        assert_eq!(r.selected, Some(1), "{mu_source:?}");
        assert!(r.success);
    }
}

#[test]
fn reports_are_reproducible() {
    let a = learn_projector_class(&two_point(Some(true)), &projector_class(), &cfg(11)).unwrap();
    let b = learn_projector_class(&two_point(Some(true)), &projector_class(), &cfg(11)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sup_gap_median_decreases() {
    let mut rng = StreamRng::new(12, 0);
    let members: Vec<ConceptRef> = (0..10)
        .map(|_| Arc::new(ConstantConcept(ConceptOutput::Projector(random_projector(2, 1, &mut rng)))) as ConceptRef)
        .collect();
    let cls = ConceptClass::finite(members).unwrap();
    let curve =
        uniform_convergence_experiment(&two_point(None), &cls, &[100, 400, 1600], 400, 0.2, 1000, &mut rng).unwrap();
    let medians: Vec<f64> = curve.points.iter().map(|p| p.median).collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
    assert!(curve.median_nonincreasing(0.0));
    assert!(curve.within_bound());
}

#[test]
fn single_concept_decays_at_hoeffding_rate() {
    let mut rng = StreamRng::new(13, 0);
    let cls = ConceptClass::finite(vec![encoding(ConceptKind::Projector)]).unwrap();
    // the encoding has zero loss everywhere: no deviation at all
    let curve =
        uniform_convergence_experiment(&two_point(Some(true)), &cls, &[10, 100], 50, 0.2, 10, &mut rng).unwrap();
    assert!(curve.points.iter().all(|p| p.median == 0.0 && p.exceed_freq == 0.0));
    let half =
        ConceptClass::finite(vec![
            Arc::new(ConstantConcept(ConceptOutput::Projector(Projector::basis_subset(2, &[0])))) as ConceptRef,
        ])
        .unwrap();
    let curve = uniform_convergence_experiment(&two_point(None), &half, &[100, 1600], 400, 0.2, 10, &mut rng).unwrap();
    // loss is Bernoulli(½): mean |gap| ≈ √(2/π)·½/√n
    for p in &curve.points {
        let expected = (2.0 / core::f64::consts::PI).sqrt() * 0.5 / (p.n as f64).sqrt();
        assert!((p.mean - expected).abs() < 0.25 * expected, "{} vs {expected}", p.mean);
    }
    assert!(matches!(
        uniform_convergence_experiment(&two_point(None), &half, &[], 1, 0.2, 10, &mut rng),
        Err(LearnerError::BadExperiment)
    ));
}
