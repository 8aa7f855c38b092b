//! Helstrom identity and the matrix inequalities the learning guarantees lean on.

use cqlearn_core::qcore::random::{haar_unitary, random_density, random_hermitian};
use cqlearn_core::qcore::{
    bures_distance, eigh, fidelity, helstrom_projector, low_energy_projector, matrix_exp_hermitian, operator_norm,
    trace_distance, trace_norm, ComplexMatrix, DensityMatrix, ExpMode, HermitianMatrix, LinalgError,
};
use cqlearn_core::StreamRng;
use rand::Rng;

use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

/// `(lhs, rhs)` of one inequality `lhs ≤ rhs` (or of an identity, with `rhs` the other side).
type Sides = (f64, f64);

const LEMMAS: [&str; 7] = [
    "helstrom_identity",
    "gibbs_state_lipschitz",
    "unitary_exponential_bound",
    "real_exponential_bound",
    "spectral_projector_perturbation",
    "weyl_eigenvalue_perturbation",
    "trace_distance_fidelity_sandwich",
];

fn gibbs(h: &HermitianMatrix) -> Result<ComplexMatrix, LinalgError> {
    let e = matrix_exp_hermitian(h, ExpMode::Real(1.0))?;
    let z = e.trace().re;
    Ok(e.scale_real(1.0 / z))
}

fn perturbed(h: &HermitianMatrix, scale: f64, rng: &mut StreamRng) -> HermitianMatrix {
    let d = random_hermitian(h.dim(), scale, rng);
    HermitianMatrix::tight(h.matrix() + d.matrix()).expect("sum of Hermitian matrices")
}

/// Hermitian `A` with no eigenvalues in `(θ − 2ε, θ + 2ε)` and `B` with `‖A − B‖ ≤ ε`.
fn gapped_pair(d: usize, rng: &mut StreamRng) -> Result<(HermitianMatrix, HermitianMatrix, f64, f64), LinalgError> {
    let theta = rng.random_range(-1.0..1.0);
    let eps = rng.random_range(0.02..0.5);
    let values: Vec<f64> = (0..d)
        .map(|i| {
            let offset = 2.0 * eps + rng.random_range(0.0..2.0);
            // keep both sides of the gap occupied
            if i % 2 == 0 {
                theta - offset
            } else {
                theta + offset
            }
        })
        .collect();
    let u = haar_unitary(d, rng);
    let a = HermitianMatrix::tight(ComplexMatrix::from_real_diagonal(&values).conjugate_by(&u))?;
    let delta = random_hermitian(d, 1.0, rng);
    let size = rng.random_range(0.0..1.0) * eps / operator_norm(delta.matrix())?;
    let b = HermitianMatrix::tight(a.matrix() + &delta.matrix().scale_real(size))?;
    Ok((a, b, theta, eps))
}

fn instance(rng: &mut StreamRng) -> Result<[Sides; 7], LinalgError> {
    let d = rng.random_range(2..=4usize);
    let (si, sj) = (random_density(d, rng.random_range(1..=d), rng), random_density(d, rng.random_range(1..=d), rng));
    let a = helstrom_projector(&si, &sj)?;
    let helstrom = (trace_distance(&si, &sj)?, si.probability(&a)? - sj.probability(&a)?);

    let h = random_hermitian(d, rng.random_range(0.1..2.0), rng);
    let h2 = perturbed(&h, rng.random_range(0.001..1.0), rng);
    let diff = operator_norm(&(h.matrix() - h2.matrix()))?;
    let gibbs_side = (trace_norm(&(&gibbs(&h)? - &gibbs(&h2)?))?, 2.0 * (diff.exp() - 1.0));
    let exp_rhs = diff * diff.exp() * operator_norm(h.matrix())?.exp();
    let unitary = (
        operator_norm(
            &(&matrix_exp_hermitian(&h, ExpMode::Unitary(1.0))? - &matrix_exp_hermitian(&h2, ExpMode::Unitary(1.0))?),
        )?,
        exp_rhs,
    );
    let real = (
        operator_norm(
            &(&matrix_exp_hermitian(&h, ExpMode::Real(1.0))? - &matrix_exp_hermitian(&h2, ExpMode::Real(1.0))?),
        )?,
        exp_rhs,
    );

    let (ga, gb, theta, eps) = gapped_pair(d, rng)?;
    let (e, f) = (low_energy_projector(&ga, theta)?, low_energy_projector(&gb, theta)?);
    let ab = operator_norm(&(ga.matrix() - gb.matrix()))?;
    let spectral = (operator_norm(&(e.matrix() - f.matrix()))?, std::f64::consts::PI / (4.0 * eps) * ab);

    let (la, lb) = (eigh(h.matrix())?.values, eigh(h2.matrix())?.values);
    let weyl = (la.iter().zip(&lb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max), diff);

    let (r1, r2): (DensityMatrix, DensityMatrix) =
        (random_density(d, rng.random_range(1..=d), rng), random_density(d, rng.random_range(1..=d), rng));
    let dtr = trace_distance(&r1, &r2)?;
    // both halves folded into one slack: min(d_Bures − d_tr, d_tr − (1 − F)) ≥ 0
    let slack = (bures_distance(&r1, &r2)? - dtr).min(dtr - (1.0 - fidelity(&r1, &r2)?));
    Ok([helstrom, gibbs_side, unitary, real, spectral, weyl, (-slack, 0.0)])
}

pub fn matrix_lemmas(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let results = ctx.try_par_map(ctx.trials, |i| Ok(instance(&mut ctx.rng(0, i))?))?;
    let mut out = Outcome::new(&["lemma", "instances", "violations", "max_lhs_minus_rhs", "max_ratio"]);
    for (k, name) in LEMMAS.iter().enumerate() {
        let sides: Vec<Sides> = results.iter().map(|r| r[k]).collect();
        let (violations, worst) = if k == 0 {
            let worst = sides.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            (sides.iter().filter(|(a, b)| (a - b).abs() > 1e-9).count(), worst)
        } else {
            let worst = sides.iter().map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
            (sides.iter().filter(|(a, b)| *a > b + 1e-10 * b.abs().max(1.0)).count(), worst)
        };
        let max_ratio = sides.iter().filter(|s| s.1 > 0.0).map(|(a, b)| a / b).fold(0.0, f64::max);
        out.table.push(vec![cell(name), cell(sides.len()), cell(violations), cell(worst), cell(max_ratio)]);
        let detail = if k == 0 { "identity to 1e-9".to_owned() } else { format!("max lhs/rhs {max_ratio:.4}") };
        out.check(Check::at_most(format!("{name}_violations"), violations as f64, 0.0).with_detail(detail));
    }
    out.metric("instances", results.len());
    Ok(out)
}
