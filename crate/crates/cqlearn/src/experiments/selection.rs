//! Hypothesis selection with exact and with estimated pairwise acceptance means.

use cqlearn_core::algorithms::{average_trace_distance, hypothesis_selection as select, EstimatorBackend, MuSource};
use cqlearn_core::qcore::random::random_density;
use cqlearn_core::qcore::DensityMatrix;
use cqlearn_core::simstate::{Backend, ProductState, Runs};
use cqlearn_core::StreamRng;
use rand::Rng;
use serde_json::json;

use super::{diag_qubit, random_split, rate, runs_of};
use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

const HYPOTHESES: usize = 4;
const EXACT_INSTANCES: u64 = 100;
const EXACT_SITES: usize = 6;
const CELLS: usize = 2;
const DEFAULT_BLOCK: u64 = 200;

struct Scored {
    selected: usize,
    distances: Vec<f64>,
}

impl Scored {
    fn eta(&self) -> f64 {
        self.distances.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn chosen(&self) -> f64 {
        self.distances[self.selected]
    }
}

fn score(state: &ProductState, hyps: &[Runs<DensityMatrix>], selected: usize) -> Result<Scored, ExperimentError> {
    let distances = hyps.iter().map(|h| average_trace_distance(state, h)).collect::<Result<_, _>>()?;
    Ok(Scored { selected, distances })
}

/// Dense sites; one hypothesis is the truth depolarized, the rest are unrelated.
fn exact_instance(
    ctx: &Context,
    rng: &mut StreamRng,
) -> Result<(ProductState, Vec<Runs<DensityMatrix>>), ExperimentError> {
    let truth: Vec<DensityMatrix> = (0..EXACT_SITES).map(|_| random_density(2, rng.random_range(1..=2), rng)).collect();
    let close = rng.random_range(0..HYPOTHESES);
    let hyps = (0..HYPOTHESES)
        .map(|k| {
            let sites = if k == close {
                let p = rng.random_range(0.0..0.5);
                truth.iter().map(|s| s.depolarize(p)).collect()
            } else {
                (0..EXACT_SITES).map(|_| random_density(2, rng.random_range(1..=2), rng)).collect()
            };
            Runs::from_sites(sites)
        })
        .collect();
    Ok((ProductState::from_sites(truth, Backend::Dense, &ctx.cfg.sim)?, hyps))
}

/// Diagonal cells; one hypothesis perturbs the true populations.
fn commuting_instance(
    ctx: &Context,
    n: u64,
    rng: &mut StreamRng,
) -> Result<(ProductState, Vec<Runs<DensityMatrix>>), ExperimentError> {
    let lens = random_split(n, CELLS, rng);
    let pops: Vec<f64> = (0..CELLS).map(|_| rng.random()).collect();
    let close = rng.random_range(0..HYPOTHESES);
    let hyps = (0..HYPOTHESES)
        .map(|k| {
            let sites: Vec<DensityMatrix> = if k == close {
                pops.iter().map(|&p| diag_qubit((p + rng.random_range(-0.1..0.1)).clamp(0.0, 1.0))).collect()
            } else {
                (0..CELLS).map(|_| diag_qubit(rng.random())).collect()
            };
            runs_of(&sites, &lens)
        })
        .collect();
    let truth: Vec<DensityMatrix> = pops.iter().map(|&p| diag_qubit(p)).collect();
    Ok((ProductState::new(runs_of(&truth, &lens), Backend::Commuting, &ctx.cfg.sim)?, hyps))
}

pub fn hypothesis_selection(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let eps = ctx.eps_or(0.1);
    let delta = ctx.delta_or(0.25);
    let exact_alg = ctx.cfg.algorithm(eps, delta, 10, EstimatorBackend::Dense);
    let exact = ctx.try_par_map(EXACT_INSTANCES, |i| {
        let mut rng = ctx.rng(0, i);
        let (state, hyps) = exact_instance(ctx, &mut rng)?;
        let report = select(&state, &hyps, MuSource::Exact, &exact_alg, &mut rng)?;
        score(&state, &hyps, report.selected)
    })?;

    let alg = ctx.cfg.algorithm(eps, delta, 10, EstimatorBackend::CommutingDp);
    let k = alg.failure_budget(alg.t_rounds);
    let n = ctx.cfg.n.unwrap_or(6 * alg.t_rounds * k * DEFAULT_BLOCK);
    let estimated = ctx.try_par_map(ctx.trials, |t| {
        let mut rng = ctx.rng(1, t);
        let (state, hyps) = commuting_instance(ctx, n, &mut rng)?;
        let report = select(&state, &hyps, MuSource::Estimated, &alg, &mut rng)?;
        let updates = report.ere.as_ref().map_or(0, |e| e.updates());
        Ok((score(&state, &hyps, report.selected)?, report.deltas, updates))
    })?;

    let mut out = Outcome::new(&["mode", "instance", "selected", "selected_distance", "eta", "limit", "within_limit"]);
    let mut exact_violations = 0u64;
    for (i, s) in exact.iter().enumerate() {
        let limit = 3.0 * s.eta();
        let ok = s.chosen() <= limit + 1e-12;
        exact_violations += u64::from(!ok);
        out.table.push(vec![
            cell("exact"),
            cell(i),
            cell(s.selected),
            cell(s.chosen()),
            cell(s.eta()),
            cell(limit),
            cell(ok),
        ]);
    }
    let mut hits = Vec::with_capacity(estimated.len());
    for (i, (s, deltas, updates)) in estimated.iter().enumerate() {
        let limit = 3.0 * s.eta() + 4.0 * eps;
        let ok = s.chosen() <= limit;
        hits.push(ok);
        out.table.push(vec![
            cell("estimated"),
            cell(i),
            cell(s.selected),
            cell(s.chosen()),
            cell(s.eta()),
            cell(limit),
            cell(ok),
        ]);
        out.trace.push(json!({ "instance": i, "distances": s.distances, "deltas": deltas, "updates": updates }));
    }
    out.metric("n_estimated", n);
    out.metric("eps", eps);
    out.metric("delta", delta);
    out.check(
        Check::at_most("selection_exact_mu_violations", exact_violations as f64, 0.0)
            .with_detail(format!("{EXACT_INSTANCES} dense instances, m = {HYPOTHESES}, limit 3 eta")),
    );
    out.check(
        Check::at_least("selection_estimated_mu_within_limit_rate", rate(hits), 1.0 - delta)
            .with_detail(format!("{} commuting instances, limit 3 eta + 4 eps, n = {n}", estimated.len())),
    );
    Ok(out)
}
