//! Risk minimization on a commuting instance with known acceptance means.

use cqlearn_core::algorithms::{erm_projector, EstimatorBackend};
use cqlearn_core::qcore::{DensityMatrix, Projector};
use cqlearn_core::simstate::{Backend, ProductState, Runs};
use rand::seq::SliceRandom;
use serde_json::json;

use super::rate;
use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

/// Basis size of every site; concept `c` accepts `k_c` basis states, so `μ_c = k_c/10`.
const DIM: usize = 10;
/// Block length the default register is sized for.
const DEFAULT_BLOCK: u64 = 400;

pub fn erm_convergence(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let eps = ctx.eps_or(0.1);
    let delta = ctx.delta_or(0.25);
    let alg = ctx.cfg.algorithm(eps, delta, 1, EstimatorBackend::CommutingDp);
    let t = alg.erm_thresholds();
    let k = alg.failure_budget(t);
    let n = ctx.cfg.n.unwrap_or(6 * t * k * DEFAULT_BLOCK);
    let tolerance = 6.0 * eps;
    let runs = ctx.try_par_map(ctx.trials, |trial| {
        let mut rng = ctx.rng(0, trial);
        let mut counts: Vec<usize> = (2..=9).collect();
        counts.shuffle(&mut rng);
        let mu: Vec<f64> = counts.iter().map(|&c| c as f64 / DIM as f64).collect();
        let state =
            ProductState::new(Runs::uniform(DensityMatrix::maximally_mixed(DIM), n), Backend::Commuting, &ctx.cfg.sim)?;
        let concepts: Vec<_> = counts
            .iter()
            .map(|&c| Runs::uniform(Projector::basis_subset(DIM, &(0..c).collect::<Vec<_>>()), n))
            .collect();
        let alg = cqlearn_core::algorithms::AlgorithmConfig { stream: trial, ..alg.clone() };
        let report = erm_projector(&state, &concepts, &alg, &mut rng)?;
        Ok((mu, report))
    })?;
    let mut out =
        Outcome::new(&["trial", "selected", "mu_hat", "mu_selected", "mu_max", "degenerate", "within_tolerance"]);
    let mut hits = Vec::with_capacity(runs.len());
    for (trial, (mu, r)) in runs.iter().enumerate() {
        let mu_max = mu.iter().copied().fold(f64::MIN, f64::max);
        let ok = (r.mu_hat - mu_max).abs() <= tolerance && (r.mu_hat - mu[r.concept]).abs() <= tolerance;
        hits.push(ok);
        out.table.push(vec![
            cell(trial),
            cell(r.concept),
            cell(r.mu_hat),
            cell(mu[r.concept]),
            cell(mu_max),
            cell(r.degenerate),
            cell(ok),
        ]);
        out.trace.push(json!({ "trial": trial, "steps": r.steps, "blocks_used": r.blocks_used }));
    }
    let first = &runs[0].1;
    out.metric("n", n);
    out.metric("schedule", first.schedule);
    out.metric("advisory", first.advisory);
    out.metric("degenerate_runs", runs.iter().filter(|r| r.1.degenerate).count());
    let mean_abs_gap =
        runs.iter().map(|(mu, r)| (r.mu_hat - mu.iter().copied().fold(f64::MIN, f64::max)).abs()).sum::<f64>()
            / runs.len() as f64;
    out.metric("mean_abs_gap_to_max", mean_abs_gap);
    out.check(
        Check::at_least("erm_within_six_eps_rate", rate(hits), 1.0 - delta)
            .with_detail(format!("m = 8, n = {n}, block length {}", first.schedule.len)),
    );
    out.check(Check::reported("erm_mean_abs_gap_to_max", mean_abs_gap));
    out.check(
        Check::reported("erm_sizing_advisory_satisfied", f64::from(u8::from(first.advisory.satisfied)))
            .with_detail(format!("lhs {:.3} vs rhs {:.3e}", first.advisory.lhs, first.advisory.rhs)),
    );
    Ok(out)
}
