//! Risk estimation with the dense multi-copy estimator, replayed against an
//! independent post-selection oracle.

use cqlearn_core::algorithms::{ere_shadow, Direction, EreReport, EstimatorBackend, PostSelection};
use cqlearn_core::qcore::{ComplexMatrix, DensityMatrix, Projector, C64};
use cqlearn_core::simstate::{Backend, ProductState};
use rand::Rng;
use serde_json::json;

use super::{diag_qubit, random_split, rate, runs_of};
use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

const CELLS: usize = 2;
const CONCEPTS: usize = 3;
/// Long enough that the check step rarely confirms an estimate within `ε`: with only
/// `q = 3` copies such a spurious update can pin a prediction at 0 or 1 for good.
const DEFAULT_BLOCK: u64 = 12_800;

/// `σ^{⊗q}` with the uninformed prior `σ = Σ_k w_k |k⟩⟨k| ⊗ I/d`, updated by explicit
/// projections.
struct PostSelectionOracle {
    q: u32,
    single: Vec<ComplexMatrix>,
    rho: ComplexMatrix,
}

fn block_diag(blocks: &[(f64, &ComplexMatrix)]) -> ComplexMatrix {
    let d = blocks[0].1.dim();
    ComplexMatrix::from_fn(d * blocks.len(), |r, c| {
        let (br, bc) = (r / d, c / d);
        if br == bc {
            blocks[br].1[(r % d, c % d)] * blocks[br].0
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors[1..].iter().fold(factors[0].clone(), |acc, f| acc.kron(f))
}

impl PostSelectionOracle {
    fn new(weights: &[f64], projectors: &[Vec<Projector>], q: u32) -> Self {
        let d = projectors[0][0].dim();
        let mixed = DensityMatrix::maximally_mixed(d);
        let sigma = block_diag(&weights.iter().map(|&w| (w, mixed.matrix())).collect::<Vec<_>>());
        let single = projectors
            .iter()
            .map(|per_cell| block_diag(&per_cell.iter().map(|p| (1.0, p.matrix())).collect::<Vec<_>>()))
            .collect();
        let rho = kron_all(&vec![&sigma; q as usize]);
        Self { q, single, rho }
    }

    /// `Π_c` on copy `j`, identity elsewhere.
    fn on_copy(&self, c: usize, j: u32) -> ComplexMatrix {
        let id = ComplexMatrix::identity(self.single[c].dim());
        let factors: Vec<&ComplexMatrix> = (0..self.q).map(|i| if i == j { &self.single[c] } else { &id }).collect();
        kron_all(&factors)
    }

    /// Copy-averaged acceptance of every concept.
    fn predictions(&self) -> Vec<f64> {
        (0..self.single.len())
            .map(|c| (0..self.q).map(|j| self.rho.trace_product_real(&self.on_copy(c, j))).sum::<f64>() / self.q as f64)
            .collect()
    }

    /// Sum over accept patterns kept by the event, each a product of `Π` and `1 − Π`.
    fn event(&self, c: usize, direction: Direction, r: u32) -> ComplexMatrix {
        let p = &self.single[c];
        let comp = &ComplexMatrix::identity(p.dim()) - p;
        let mut total = ComplexMatrix::zeros(self.rho.dim());
        for pattern in 0u32..(1 << self.q) {
            let accepts = pattern.count_ones();
            let kept = match direction {
                Direction::Plus => accepts >= r,
                Direction::Minus => accepts <= r,
            };
            if kept {
                let factors: Vec<&ComplexMatrix> =
                    (0..self.q).map(|j| if pattern >> j & 1 == 1 { p } else { &comp }).collect();
                total = &total + &kron_all(&factors);
            }
        }
        total
    }

    /// Applies the event and returns its probability on the state before.
    fn apply(&mut self, ev: &PostSelection) -> f64 {
        let f = self.event(ev.concept, ev.direction, ev.r);
        let kept = &(&f * &self.rho) * &f;
        let prob = kept.trace().re;
        self.rho = kept.scale_real(1.0 / prob);
        prob
    }
}

/// Largest disagreement between the reported run and the oracle replay.
fn replay(oracle: &mut PostSelectionOracle, report: &EreReport) -> f64 {
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for round in &report.rounds {
        worst = worst.max(diff(&round.lambdas, &oracle.predictions()));
        if let Some(ev) = &round.update {
            worst = worst.max((oracle.apply(ev) - ev.probability).abs());
        }
    }
    worst.max(diff(&report.estimates, &oracle.predictions()))
}

pub fn ere_dense_update(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let eps = ctx.eps_or(0.15);
    let delta = ctx.delta_or(0.25);
    let alg = ctx.cfg.algorithm(eps, delta, 5, EstimatorBackend::Dense);
    let k = alg.failure_budget(alg.t_rounds);
    let n = ctx.cfg.n.unwrap_or(6 * alg.t_rounds * k * DEFAULT_BLOCK);
    let runs = ctx.try_par_map(ctx.trials, |trial| {
        let mut rng = ctx.rng(0, trial);
        let lens = random_split(n, CELLS, &mut rng);
        let states: Vec<DensityMatrix> = (0..CELLS).map(|_| diag_qubit(rng.random())).collect();
        let masks: Vec<Vec<Projector>> = (0..CONCEPTS)
            .map(|_| (0..CELLS).map(|_| Projector::from_mask(&[rng.random(), rng.random()])).collect())
            .collect();
        let weights: Vec<f64> = lens.iter().map(|&l| l as f64 / n as f64).collect();
        let mu: Vec<f64> = masks
            .iter()
            .map(|per_cell| {
                per_cell.iter().zip(&states).zip(&weights).map(|((p, s), w)| w * s.probability(p).unwrap_or(0.0)).sum()
            })
            .collect();
        let state = ProductState::new(runs_of(&states, &lens), Backend::Commuting, &ctx.cfg.sim)?;
        let concepts: Vec<_> = masks.iter().map(|per_cell| runs_of(per_cell, &lens)).collect();
        let report = ere_shadow(&state, &concepts, &alg, &mut rng)?;
        let mut oracle = PostSelectionOracle::new(&weights, &masks, alg.q_copies);
        let mismatch = replay(&mut oracle, &report);
        Ok((mu, report, mismatch))
    })?;
    let mut out = Outcome::new(&["trial", "updates", "converged", "stalled", "max_abs_error", "oracle_mismatch"]);
    let mut worst_mismatch = 0.0f64;
    let mut hits = Vec::with_capacity(runs.len());
    for (trial, (mu, r, mismatch)) in runs.iter().enumerate() {
        let err = r.estimates.iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        hits.push(err <= eps);
        worst_mismatch = worst_mismatch.max(*mismatch);
        out.table.push(vec![
            cell(trial),
            cell(r.updates()),
            cell(r.converged),
            cell(r.stalled),
            cell(err),
            cell(mismatch),
        ]);
        let updates: Vec<_> = r.rounds.iter().filter_map(|x| x.update).collect();
        out.trace.push(json!({ "trial": trial, "mu": mu, "estimates": r.estimates, "updates": updates }));
    }
    out.metric("n", n);
    out.metric("q", alg.q_copies);
    out.metric("schedule", runs[0].1.schedule);
    out.metric("mean_updates", runs.iter().map(|r| r.1.updates() as f64).sum::<f64>() / runs.len() as f64);
    out.check(
        Check::at_least("ere_final_error_within_eps_rate", rate(hits), 0.75)
            .with_detail(format!("2 cells, q = {}, m = {CONCEPTS}, at most {} updates", alg.q_copies, alg.t_rounds)),
    );
    out.check(Check::at_most("ere_estimator_matches_post_selection_oracle", worst_mismatch, 1e-9));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_predictions_start_at_the_prior() {
        let masks = vec![vec![Projector::from_mask(&[true, true]), Projector::from_mask(&[false, false])]];
        let oracle = PostSelectionOracle::new(&[0.25, 0.75], &masks, 2);
        assert!((oracle.predictions()[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn plus_event_keeps_all_accepting_copies() {
        let masks = vec![vec![Projector::from_mask(&[true, false])]];
        let mut oracle = PostSelectionOracle::new(&[1.0], &masks, 2);
        let ev = PostSelection { concept: 0, direction: Direction::Plus, r: 2, q: 2, probability: 0.25 };
        assert!((oracle.apply(&ev) - 0.25).abs() < 1e-12);
        assert!((oracle.predictions()[0] - 1.0).abs() < 1e-12);
    }
}
