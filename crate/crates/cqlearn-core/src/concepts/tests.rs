use super::*;
use alloc::vec;

use crate::qcore::random::{haar_pure_state, haar_unitary, random_hermitian};
use crate::qcore::{eigh, HermitianMatrix, C64};

fn sorted_spectrum(m: &ComplexMatrix) -> Vec<f64> {
    let mut v = eigh(m).unwrap().values;
    v.sort_by(f64::total_cmp);
    v
}

/// Random Hermitian matrix rescaled to operator norm exactly `norm`.
fn hermitian_with_norm(dim: usize, norm: f64, rng: &mut StreamRng) -> HermitianMatrix {
    let h = random_hermitian(dim, 1.0, rng);
    let scale = norm / operator_norm(h.matrix()).unwrap();
    HermitianMatrix::tight(h.matrix().scale_real(scale)).unwrap()
}

fn bits(b: &[bool]) -> Label {
    Label::Bits(b.to_vec())
}

fn proj0() -> ConceptRef {
    Arc::new(ConstantConcept(ConceptOutput::Projector(Projector::basis_subset(2, &[0]))))
}

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, vec![C64::new(0., 0.), C64::new(1., 0.), C64::new(1., 0.), C64::new(0., 0.)]).unwrap()
}

#[test]
fn loss_examples() {
    let rho = DensityMatrix::maximally_mixed(2);
    let x = Label::scalar(0.0);
    let id = ConstantConcept(ConceptOutput::Projector(Projector::identity(2)));
    assert_eq!(loss(&id, &x, &rho).unwrap(), 0.0);
    assert!((loss(proj0().as_ref(), &x, &rho).unwrap() - 0.5).abs() < 1e-15);
    let same = ConstantConcept(ConceptOutput::State(rho.clone()));
    assert!(loss(&same, &x, &rho).unwrap() < 1e-12);
    assert!(loss(&id, &x, &DensityMatrix::maximally_mixed(4)).is_err());
}

#[test]
fn empirical_risk_examples() {
    let c = proj0();
    let zero = DensityMatrix::basis(2, 0);
    let one = DensityMatrix::basis(2, 1);
    let x = Label::scalar(0.0);
    assert!(empirical_risk(c.as_ref(), &[(x.clone(), zero.clone()), (x.clone(), zero.clone())]).unwrap() < 1e-15);
    assert!((empirical_risk(c.as_ref(), &[(x.clone(), zero), (x.clone(), one)]).unwrap() - 0.5).abs() < 1e-15);

    let mut rng = StreamRng::new(5, 0);
    let data: Vec<(Label, DensityMatrix)> =
        (0..40).map(|i| (Label::scalar(i as f64), haar_pure_state(2, &mut rng))).collect();
    let oracle: f64 = data.iter().map(|(_, r)| 1.0 - r.matrix().as_slice()[0].re).sum::<f64>() / 40.0;
    assert!((empirical_risk(c.as_ref(), &data).unwrap() - oracle).abs() < 1e-12);
}

fn two_point_source() -> FiniteSource {
    let table = TableConcept::new(
        vec![
            (Label::scalar(0.0), ConceptOutput::State(DensityMatrix::diagonal(&[0.8, 0.2]).unwrap())),
            (Label::scalar(1.0), ConceptOutput::State(DensityMatrix::diagonal(&[0.6, 0.4]).unwrap())),
        ],
        0.0,
    )
    .unwrap();
    FiniteSource::new(vec![(Label::scalar(0.0), 0.5), (Label::scalar(1.0), 0.5)], Arc::new(table), None).unwrap()
}

#[test]
fn two_point_true_risk_is_exact_average() {
    let src = two_point_source();
    let r = true_risk(proj0().as_ref(), &src, 10, &mut StreamRng::new(1, 0)).unwrap();
    assert!(r.exact);
    assert!((r.value - 0.3).abs() < 1e-14);
}

#[test]
fn constant_loss_true_risk() {
    let channel: ConceptRef = Arc::new(ConstantConcept(ConceptOutput::State(DensityMatrix::maximally_mixed(2))));
    let src = UniformBoxSource::new(vec![(0.0, 1.0)], channel, None).unwrap();
    let r = true_risk(proj0().as_ref(), &src, 100, &mut StreamRng::new(1, 0)).unwrap();
    assert!(!r.exact);
    assert!((r.value - 0.5).abs() < 1e-14);
    assert!(r.std_error < 1e-12);
}

#[derive(Debug)]
struct Thresholded;

impl Concept for Thresholded {
    fn kind(&self) -> ConceptKind {
        ConceptKind::State
    }
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        let t = x.coordinates()[0];
        Ok(ConceptOutput::State(DensityMatrix::diagonal(&[t, 1.0 - t])?))
    }
    fn params(&self) -> ParamRecord {
        ParamRecord::new("thresholded", Vec::new())
    }
}

#[test]
fn finite_exact_risk_matches_monte_carlo() {
    let mut rng = StreamRng::new(9, 0);
    let support: Vec<(Label, f64)> = (0..6).map(|k| (Label::scalar(k as f64 / 5.0), 1.0 + k as f64)).collect();
    let src = FiniteSource::new(support, Arc::new(Thresholded), None).unwrap();
    let exact = true_risk(proj0().as_ref(), &src, 0, &mut rng).unwrap();

    // same source with the finite support hidden, forcing sampling
    #[derive(Debug)]
    struct Hidden(FiniteSource);
    impl CqSource for Hidden {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn sample_label(&self, rng: &mut StreamRng) -> Label {
            self.0.sample_label(rng)
        }
        fn channel(&self, x: &Label) -> Result<DensityMatrix, ConceptError> {
            self.0.channel(x)
        }
    }
    let mc = true_risk(proj0().as_ref(), &Hidden(src), 20_000, &mut rng).unwrap();
    assert!((mc.value - exact.value).abs() < 4.0 * mc.std_error, "{mc:?} vs {exact:?}");
}

#[test]
fn identity_circuit_reproduces_prep() {
    let prep: ConceptRef = Arc::new(BasisEncoding::new(2, ConceptKind::State));
    let c = CircuitConcept::new(prep.clone(), Circuit::new(2, Vec::new()).unwrap(), 0.0).unwrap();
    let x = bits(&[true, false]);
    assert_eq!(c.eval(&x).unwrap(), prep.eval(&x).unwrap());
}

#[test]
fn x_gate_flips_zero() {
    let prep: ConceptRef = Arc::new(BasisEncoding::new(1, ConceptKind::State));
    let circ = Circuit::new(1, vec![CircuitOp::Fixed { first: 0, gate: pauli_x() }]).unwrap();
    let c = CircuitConcept::new(prep, circ, 0.0).unwrap();
    let out = c.eval_state(&bits(&[false])).unwrap();
    assert!((out.matrix() - DensityMatrix::basis(2, 1).matrix()).max_abs() < 1e-15);
}

#[test]
fn gate_embedding_targets_the_right_qubit() {
    // X on qubit 1 of 2 maps |00⟩ to |01⟩
    let prep: ConceptRef = Arc::new(BasisEncoding::new(2, ConceptKind::State));
    let circ = Circuit::new(2, vec![CircuitOp::Fixed { first: 1, gate: pauli_x() }]).unwrap();
    let out = CircuitConcept::new(prep, circ, 0.0).unwrap().eval_state(&bits(&[false, false])).unwrap();
    assert!((out.matrix() - DensityMatrix::basis(4, 1).matrix()).max_abs() < 1e-15);
}

#[test]
fn random_local_circuit_preserves_spectrum() {
    let mut rng = StreamRng::new(3, 0);
    let prep: ConceptRef = Arc::new(Thresholded);
    let prep2: ConceptRef =
        Arc::new(ConstantConcept(ConceptOutput::State(DensityMatrix::diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap())));
    assert!(make_circuit_class(CircuitArch::Local { qubits: 2, steps: 3 }, prep, 10).is_err());
    let cls = make_circuit_class(CircuitArch::Local { qubits: 2, steps: 3 }, prep2.clone(), 10).unwrap();
    let x = Label::scalar(0.0);
    let want = sorted_spectrum(prep2.eval(&x).unwrap().matrix());
    for _ in 0..20 {
        let c = cls.sample(&mut rng).unwrap();
        let out = c.eval_state(&x).unwrap();
        DensityMatrix::new(out.matrix().clone()).unwrap();
        let got = sorted_spectrum(out.matrix());
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}

#[test]
fn circuit_cap_is_enforced() {
    let prep: ConceptRef = Arc::new(BasisEncoding::new(3, ConceptKind::State));
    let err = make_circuit_class(CircuitArch::FullUnitary { qubits: 3 }, prep, 2).unwrap_err();
    assert!(matches!(err, ConceptError::CapExceeded { .. }));
}

#[test]
fn zero_function_data_gates_reduce_to_fixed_circuit() {
    let mut rng = StreamRng::new(4, 0);
    let gate = haar_unitary(4, &mut rng);
    let ham = random_hermitian(2, 1.0, &mut rng);
    let zero = RealFunctionFamily::constant(0.0).unwrap().member(&[0.0]).unwrap();
    let fixed = Circuit::new(2, vec![CircuitOp::Fixed { first: 0, gate: gate.clone() }]).unwrap();
    let with_data = Circuit::new(
        2,
        vec![
            CircuitOp::Data { first: 1, ham: ham.clone(), g: zero.clone() },
            CircuitOp::Fixed { first: 0, gate },
            CircuitOp::Data { first: 0, ham, g: zero },
        ],
    )
    .unwrap();
    let x = Label::scalar(0.4);
    assert!((&fixed.unitary(&x).unwrap() - &with_data.unitary(&x).unwrap()).max_abs() < 1e-12);
}

#[test]
fn half_pi_z_gate_at_zero_and_two() {
    let ham = HermitianMatrix::diagonal(&[PI / 2.0, -PI / 2.0]);
    let ident = RealFunctionFamily::new(vec![Feature::Coordinate(0)], vec![(1.0, 1.0)], vec![(0.0, 2.0)], 2.0, 1.0)
        .unwrap()
        .member(&[1.0])
        .unwrap();
    let circ = Circuit::new(1, vec![CircuitOp::Data { first: 0, ham, g: ident }]).unwrap();
    let at0 = circ.unitary(&Label::scalar(0.0)).unwrap();
    let at2 = circ.unitary(&Label::scalar(2.0)).unwrap();
    assert!((&at0 - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
    // e^{iπZ} = −1
    assert!((&at2 + &ComplexMatrix::identity(2)).max_abs() < 1e-14);
}

use core::f64::consts::{E, PI};

#[test]
fn data_gate_continuity() {
    let mut rng = StreamRng::new(6, 0);
    let eps = 0.1;
    let k_prime = 3.0;
    for _ in 0..200 {
        let b = 0.5 + rng.random::<f64>();
        let ham = random_hermitian(4, b, &mut rng);
        let g: f64 = rng.random_range(-1.0..1.0);
        let dg = eps / (4.0 * b * E * k_prime) * rng.random_range(-1.0..1.0);
        let u = matrix_exp(&ham, g);
        let v = matrix_exp(&ham, g + dg);
        assert!(operator_norm(&(&u - &v)).unwrap() <= eps / (2.0 * k_prime));
    }
}

fn matrix_exp(h: &HermitianMatrix, s: f64) -> ComplexMatrix {
    crate::qcore::matrix_exp_hermitian(h, crate::qcore::ExpMode::Unitary(s)).unwrap()
}

use rand::Rng;

#[test]
fn data_dependent_class_samples_interleave() {
    let mut rng = StreamRng::new(8, 0);
    let prep: ConceptRef = Arc::new(BasisEncoding::new(2, ConceptKind::State));
    let g = RealFunctionFamily::affine(1.0).unwrap();
    let slots = vec![(1, 0, HermitianMatrix::diagonal(&[1.0, -1.0])), (0, 1, HermitianMatrix::diagonal(&[0.5, -0.5]))];
    let cls =
        make_data_dependent_circuit_class(CircuitArch::Local { qubits: 2, steps: 2 }, slots, g, prep, 10).unwrap();
    let c = cls.sample(&mut rng).unwrap();
    let out = c.eval_state(&bits(&[true, true])).unwrap();
    DensityMatrix::new(out.matrix().clone()).unwrap();
    assert_eq!(c.params().values.len(), 1 + 2 + 2);

    let too_strong = vec![(0, 0, HermitianMatrix::diagonal(&[2.0, -2.0]))];
    let g = RealFunctionFamily::affine(1.0).unwrap();
    let prep: ConceptRef = Arc::new(BasisEncoding::new(2, ConceptKind::State));
    assert!(
        make_data_dependent_circuit_class(CircuitArch::Local { qubits: 2, steps: 2 }, too_strong, g, prep, 10).is_err()
    );
}

fn zero_g() -> RealFunctionFamily {
    RealFunctionFamily::constant(0.0).unwrap()
}

#[test]
fn gibbs_examples() {
    let dict = HermitianDictionary::single(HermitianMatrix::diagonal(&[1.0, -1.0]));
    let flat = GibbsFamily::new(HermitianMatrix::diagonal(&[0.0, 0.0]), dict.clone(), zero_g()).unwrap();
    let c = flat.at(&[0.0, 0.3]).unwrap();
    let out = c.eval_state(&Label::scalar(0.5)).unwrap();
    assert!((out.matrix() - DensityMatrix::maximally_mixed(2).matrix()).max_abs() < 1e-14);

    let energy = 1.7;
    let fam = GibbsFamily::new(HermitianMatrix::diagonal(&[0.0, energy]), dict, zero_g()).unwrap();
    let p = fam.at(&[0.0, -0.8]).unwrap().eval_state(&Label::scalar(0.0)).unwrap().populations();
    let z = 1.0 + (-energy).exp();
    assert!((p[0] - 1.0 / z).abs() < 1e-14);
    assert!((p[1] - (-energy).exp() / z).abs() < 1e-14);
}

#[test]
fn gibbs_perturbation_lemma() {
    let mut rng = StreamRng::new(11, 0);
    for _ in 0..100 {
        let h = random_hermitian(3, 2.0, &mut rng);
        let dh = random_hermitian(3, 0.3 * rng.random::<f64>(), &mut rng);
        let h2 = h.add_scaled(1.0, &dh);
        let a = families::gibbs_state(&h).unwrap();
        let b = families::gibbs_state(&h2).unwrap();
        let lhs = trace_norm(&(a.matrix() - b.matrix())).unwrap();
        let dnorm = operator_norm(dh.matrix()).unwrap();
        assert!(lhs <= 2.0 * (dnorm.exp() - 1.0) + 1e-12);
        assert!(eigh(a.matrix()).unwrap().values.iter().all(|&l| l > 0.0));
    }
}

#[test]
fn phase_shift_examples() {
    let mut rng = StreamRng::new(12, 0);
    let probe_state = haar_pure_state(2, &mut rng);
    let probe: ConceptRef = Arc::new(ConstantConcept(ConceptOutput::State(probe_state.clone())));
    let dict = HermitianDictionary::single(HermitianMatrix::diagonal(&[1.0, -1.0]));
    let id = PhaseShiftFamily::new(probe.clone(), dict.clone(), zero_g()).unwrap();
    let out = id.at(&[0.0, 0.7]).unwrap().eval_state(&Label::scalar(0.2)).unwrap();
    assert!((out.matrix() - probe_state.matrix()).max_abs() < 1e-14);

    let fam = PhaseShiftFamily::new(probe, dict, RealFunctionFamily::fourier(2, 1.0).unwrap()).unwrap();
    for _ in 0..20 {
        let c = fam.sample(&mut rng).unwrap();
        let out = c.eval_state(&Label::scalar(rng.random())).unwrap();
        // purity Tr ρ² stays 1
        assert!((out.matrix().trace_product_real(out.matrix()) - 1.0).abs() < 1e-12);
    }

    let mixed: ConceptRef =
        Arc::new(ConstantConcept(ConceptOutput::State(DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap())));
    let h3 = HermitianDictionary::single(random_hermitian(3, 1.0, &mut rng));
    let fam = PhaseShiftFamily::new(mixed.clone(), h3, RealFunctionFamily::fourier(1, 1.0).unwrap()).unwrap();
    let want = sorted_spectrum(mixed.eval(&Label::scalar(0.0)).unwrap().matrix());
    for _ in 0..20 {
        let got = sorted_spectrum(fam.sample(&mut rng).unwrap().eval(&Label::scalar(rng.random())).unwrap().matrix());
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}

#[test]
fn low_energy_examples() {
    let h0 = HermitianMatrix::diagonal(&[0.0, 1.0, 3.0]);
    let v = HermitianDictionary::single(HermitianMatrix::diagonal(&[0.1, -0.1, 0.05]));
    let g = RealFunctionFamily::affine(1.0).unwrap();
    let below = LowEnergyFamily::new(h0.clone(), v.clone(), g.clone(), -1.0, 0.2).unwrap();
    let p = below.sample(&mut StreamRng::new(1, 0)).unwrap().eval_projector(&Label::scalar(0.3)).unwrap();
    assert_eq!(p.rank(), 0);

    let mid = LowEnergyFamily::new(h0.clone(), v.clone(), zero_g(), 2.0, 0.4).unwrap();
    let c = mid.at(&[0.0, 1.0]).unwrap();
    let want = Projector::basis_subset(3, &[0, 1]);
    for t in [0.0, 0.5, 1.0] {
        assert_eq!(c.eval_projector(&Label::scalar(t)).unwrap().matrix(), want.matrix());
    }

    let err = LowEnergyFamily::new(h0.clone(), v.clone(), g.clone(), 1.1, 0.2).unwrap_err();
    assert!(matches!(err, ConceptError::GapViolation { .. }));
    let err = LowEnergyFamily::new(h0, v, g, 2.0, 0.05).unwrap_err();
    assert!(matches!(err, ConceptError::PerturbationTooLarge { .. }));
}

#[test]
fn low_energy_perturbation_bound() {
    let mut rng = StreamRng::new(13, 0);
    let h0 = HermitianMatrix::diagonal(&[-1.0, -0.5, 1.0, 2.0]);
    let v = HermitianDictionary::single(hermitian_with_norm(4, 0.2, &mut rng));
    let g = RealFunctionFamily::affine(1.0).unwrap();
    let gap = 0.25;
    let fam = LowEnergyFamily::new(h0.clone(), v.clone(), g.clone(), 0.2, gap).unwrap();
    for _ in 0..200 {
        let c1 = fam.sample(&mut rng).unwrap();
        let c2 = fam.sample(&mut rng).unwrap();
        let x = Label::scalar(rng.random());
        let p1 = c1.eval_projector(&x).unwrap();
        let p2 = c2.eval_projector(&x).unwrap();
        let hp = |c: &ConceptRef| {
            let vals = c.params().values;
            h0.add_scaled(g.member(&vals[..2]).unwrap().eval(&x), &v.at(&vals[2..]))
        };
        let dh = operator_norm(&(hp(&c1).matrix() - hp(&c2).matrix())).unwrap();
        let lhs = operator_norm(&(p1.matrix() - p2.matrix())).unwrap();
        assert!(lhs <= PI / (4.0 * gap) * dh + 1e-10);
    }
}

#[test]
fn restriction_counts() {
    let labels = vec![Label::scalar(0.1), Label::scalar(0.5)];
    let one: Vec<ConceptRef> = vec![proj0()];
    assert_eq!(restriction_count(&one, &labels).unwrap(), 1);
    let dup: Vec<ConceptRef> = vec![proj0(), proj0(), Arc::new(IntervalConcept { a: 0.0, b: 1.0 })];
    assert_eq!(restriction_count(&dup, &labels).unwrap(), 1);

    let pts = [0.1, 0.3, 0.5, 0.7];
    let cls = IntervalFamily::new(0.0, 1.0).unwrap().grid_class(&pts).unwrap();
    let labels: Vec<Label> = pts.iter().map(|&p| Label::scalar(p)).collect();
    assert_eq!(restriction_count(cls.members().unwrap(), &labels).unwrap(), 4 * 5 / 2 + 1);
}

#[test]
fn restriction_count_matches_pairwise_oracle() {
    let mut rng = StreamRng::new(14, 0);
    let bank: Vec<Projector> = (0..3).map(|_| crate::qcore::random::random_projector(2, 1, &mut rng)).collect();
    let labels: Vec<Label> = (0..3).map(|i| Label::scalar(i as f64)).collect();
    let members: Vec<ConceptRef> = (0..12)
        .map(|id| {
            let entries = labels
                .iter()
                .map(|x| (x.clone(), ConceptOutput::Projector(bank[rng.random_range(0..3)].clone())))
                .collect();
            Arc::new(TableConcept::new(entries, id as f64).unwrap()) as ConceptRef
        })
        .collect();
    // oracle: count members not equal (pointwise, up to tolerance) to any earlier member
    let mut distinct = 0;
    for i in 0..members.len() {
        let fresh =
            (0..i).all(|j| max_label_distance(members[i].as_ref(), members[j].as_ref(), &labels).unwrap() > 1e-9);
        distinct += fresh as usize;
    }
    assert_eq!(restriction_count(&members, &labels).unwrap(), distinct);
}

fn assert_valid(out: &ConceptOutput) {
    match out {
        ConceptOutput::Projector(p) => {
            Projector::new(p.matrix().clone()).unwrap();
        }
        ConceptOutput::State(s) => {
            DensityMatrix::new(s.matrix().clone()).unwrap();
        }
    }
}

#[test]
fn every_family_emits_valid_outputs() {
    let mut rng = StreamRng::new(15, 0);
    let g = RealFunctionFamily::fourier(2, 1.0).unwrap();
    let dict =
        HermitianDictionary::new(vec![hermitian_with_norm(4, 0.1, &mut rng), hermitian_with_norm(4, 0.1, &mut rng)])
            .unwrap();
    let h0 = HermitianMatrix::diagonal(&[-2.0, -1.0, 1.5, 3.0]);
    let probe: ConceptRef = Arc::new(ConstantConcept(ConceptOutput::State(haar_pure_state(4, &mut rng))));
    let bits_prep: ConceptRef = Arc::new(BasisEncoding::new(2, ConceptKind::Projector));
    let classes = vec![
        make_gibbs_class(h0.clone(), dict.clone(), g.clone()).unwrap(),
        make_phaseshift_class(probe, dict.clone(), g.clone()).unwrap(),
        make_lowenergy_class(h0, dict, g, 0.2, 0.3).unwrap(),
        make_circuit_class(CircuitArch::Brickwork { qubits: 2, layers: 2 }, bits_prep.clone(), 10).unwrap(),
        make_circuit_class(CircuitArch::FullUnitary { qubits: 2 }, bits_prep, 10).unwrap(),
        ConceptClass::family(Arc::new(IntervalFamily::new(0.0, 1.0).unwrap())),
    ];
    for cls in &classes {
        for _ in 0..1000 / classes.len() {
            let c = cls.sample(&mut rng).unwrap();
            let x = match cls.kind() {
                ConceptKind::Projector if cls.dim() == 4 && c.params().family == "circuit" => {
                    bits(&[rng.random(), rng.random()])
                }
                _ => Label::scalar(rng.random()),
            };
            let out = c.eval(&x).unwrap();
            assert_eq!(out.kind(), cls.kind());
            assert_valid(&out);
        }
    }
}
