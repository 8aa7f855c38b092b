//! Matrix-lemma properties of the linear-algebra layer on random instances.

use cqlearn_core::qcore::random::{random_density, random_hermitian};
use cqlearn_core::qcore::{
    bures_distance, eigh, helstrom_projector, matrix_exp_hermitian, operator_norm, trace_distance, trace_norm, ExpMode,
    HermitianMatrix, TOL_HERM,
};
use cqlearn_core::StreamRng;
use proptest::prelude::*;

fn gibbs(h: &HermitianMatrix) -> cqlearn_core::qcore::ComplexMatrix {
    let e = matrix_exp_hermitian(h, ExpMode::Real(1.0)).unwrap();
    let z = e.trace().re;
    e.scale_real(1.0 / z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_states_are_valid(seed in any::<u64>(), dim in 2usize..6, rank in 1usize..6) {
        let mut rng = StreamRng::new(seed, 0);
        let rho = random_density(dim, rank.min(dim), &mut rng);
        prop_assert!(rho.matrix().hermiticity_defect() <= TOL_HERM);
        prop_assert!((rho.matrix().trace().re - 1.0).abs() <= 1e-10);
        let e = eigh(rho.matrix()).unwrap();
        prop_assert!(e.values.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn trace_distance_at_most_bures(seed in any::<u64>(), dim in 2usize..5) {
        let mut rng = StreamRng::new(seed, 1);
        let a = random_density(dim, dim, &mut rng);
        let b = random_density(dim, 1 + (seed as usize % dim), &mut rng);
        let dt = trace_distance(&a, &b).unwrap();
        let db = bures_distance(&a, &b).unwrap();
        prop_assert!(dt <= db + 1e-9, "d_tr {} > d_B {}", dt, db);
    }

    #[test]
    fn helstrom_projector_attains_trace_distance(seed in any::<u64>(), dim in 2usize..5) {
        let mut rng = StreamRng::new(seed, 2);
        let si = random_density(dim, dim, &mut rng);
        let sj = random_density(dim, dim, &mut rng);
        let a = helstrom_projector(&si, &sj).unwrap();
        let gap = si.probability(&a).unwrap() - sj.probability(&a).unwrap();
        prop_assert!((gap - trace_distance(&si, &sj).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn weyl_perturbation(seed in any::<u64>(), dim in 2usize..6) {
        let mut rng = StreamRng::new(seed, 3);
        let a = random_hermitian(dim, 1.0, &mut rng);
        let b = random_hermitian(dim, 1.0, &mut rng);
        let mut la = eigh(a.matrix()).unwrap().values;
        let mut lb = eigh(b.matrix()).unwrap().values;
        la.sort_by(f64::total_cmp);
        lb.sort_by(f64::total_cmp);
        let shift = la.iter().zip(&lb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(shift <= operator_norm(&(a.matrix() - b.matrix())).unwrap() + 1e-10);
    }

    #[test]
    fn gibbs_states_are_lipschitz_in_the_hamiltonian(seed in any::<u64>(), dim in 2usize..5, scale in 0.01f64..2.0) {
        let mut rng = StreamRng::new(seed, 4);
        let h = random_hermitian(dim, 1.0, &mut rng);
        let v = random_hermitian(dim, scale, &mut rng);
        let h2 = h.add_scaled(1.0, &v);
        let lhs = trace_norm(&(&gibbs(&h) - &gibbs(&h2))).unwrap();
        let rhs = 2.0 * (operator_norm(v.matrix()).unwrap().exp() - 1.0);
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn eigh_reconstructs(seed in any::<u64>(), dim in 1usize..7) {
        let mut rng = StreamRng::new(seed, 5);
        let h = random_hermitian(dim, 3.0, &mut rng);
        let e = eigh(h.matrix()).unwrap();
        let back = e.map(|l| l.into());
        prop_assert!((&back - h.matrix()).max_abs() <= 1e-10);
    }
}
