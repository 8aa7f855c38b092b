//! Threshold search on commuting promise instances.

use cqlearn_core::algorithms::{threshold_search, EstimatorBackend, ThresholdedConcept};
use cqlearn_core::qcore::Projector;
use cqlearn_core::simstate::{Backend, ProductState};
use cqlearn_core::StreamRng;
use rand::Rng;
use serde_json::json;

use super::{diag_qubit, random_split, rate, runs_of};
use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

const CLASS_SIZES: [usize; 3] = [4, 8, 16];

/// Smallest `n` with `(ln m + C₂)² < C₁·n·ε²`.
pub(crate) fn advisory_size(m: usize, eps: f64, c1: f64, c2: f64) -> u64 {
    let lhs = ((m as f64).ln() + c2).powi(2);
    (lhs / (c1 * eps * eps)).floor() as u64 + 1
}

/// Qubit runs with random populations; each concept accepts a random subset of the
/// basis on every run. One concept sits at or above its threshold, every other one
/// below it, some within `ε` (returning those still counts as success).
struct PromiseInstance {
    state: ProductState,
    concepts: Vec<ThresholdedConcept>,
    mu: Vec<f64>,
}

fn promise_instance(
    ctx: &Context,
    n: u64,
    m: usize,
    eps: f64,
    rng: &mut StreamRng,
) -> Result<PromiseInstance, ExperimentError> {
    let runs = rng.random_range(1..=4usize);
    let lens = random_split(n, runs, rng);
    let pops: Vec<f64> = (0..runs).map(|_| rng.random::<f64>()).collect();
    let sites: Vec<_> = pops.iter().map(|&p| diag_qubit(p)).collect();
    let state = ProductState::new(runs_of(&sites, &lens), Backend::Commuting, &ctx.cfg.sim)?;
    let good = rng.random_range(0..m);
    let mut concepts = Vec::with_capacity(m);
    let mut mu = Vec::with_capacity(m);
    for c in 0..m {
        let masks: Vec<[bool; 2]> = (0..runs).map(|_| [rng.random(), rng.random()]).collect();
        let projectors: Vec<Projector> = masks.iter().map(|mk| Projector::from_mask(mk)).collect();
        let mean = masks
            .iter()
            .zip(&pops)
            .zip(&lens)
            .map(|((mk, &p), &l)| (f64::from(u8::from(mk[0])) * p + f64::from(u8::from(mk[1])) * (1.0 - p)) * l as f64)
            .sum::<f64>()
            / n as f64;
        let theta = if c == good { mean - rng.random_range(0.0..eps) } else { mean + rng.random_range(0.0..3.0 * eps) };
        concepts.push(ThresholdedConcept { projectors: runs_of(&projectors, &lens), theta });
        mu.push(mean);
    }
    Ok(PromiseInstance { state, concepts, mu })
}

pub fn threshold_search_success(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let eps = ctx.eps_or(0.1);
    let alg = ctx.cfg.algorithm(eps, ctx.delta_or(0.25), 1, EstimatorBackend::CommutingDp);
    let mut out = Outcome::new(&["m", "n", "trial", "selected", "mu_selected", "theta_selected", "outcome"]);
    let mut summary = Vec::new();
    for (s, &m) in CLASS_SIZES.iter().enumerate() {
        let n = ctx.cfg.n.unwrap_or_else(|| advisory_size(m, eps, alg.c_cal, alg.c_offset));
        let results = ctx.try_par_map(ctx.trials, |t| {
            let mut rng = ctx.rng(s as u64, t);
            let inst = promise_instance(ctx, n, m, eps, &mut rng)?;
            let search = threshold_search(inst.state, &inst.concepts, &alg, &mut rng)?;
            let picked = search.selected.map(|c| (c, inst.mu[c], inst.concepts[c].theta));
            let p_accept: Vec<f64> = search.steps.iter().map(|st| st.p_accept).collect();
            Ok((picked, p_accept))
        })?;
        let verdict = |p: &Option<(usize, f64, f64)>| match p {
            Some((_, mu, theta)) if *mu >= theta - eps => "success",
            Some(_) => "false_positive",
            None => "pass_on_all",
        };
        for (t, (picked, p_accept)) in results.iter().enumerate() {
            let (sel, mu, theta) = picked
                .map_or((String::new(), String::new(), String::new()), |(c, mu, th)| (cell(c), cell(mu), cell(th)));
            out.table.push(vec![cell(m), cell(n), cell(t), sel, mu, theta, cell(verdict(picked))]);
            out.trace.push(json!({ "m": m, "trial": t, "p_accept": p_accept, "outcome": verdict(picked) }));
        }
        let success = rate(results.iter().map(|r| verdict(&r.0) == "success"));
        let false_pos = rate(results.iter().map(|r| verdict(&r.0) == "false_positive"));
        let lhs = ((m as f64).ln() + alg.c_offset).powi(2);
        let rhs = alg.c_cal * n as f64 * eps * eps;
        out.check(
            Check::at_least(format!("threshold_success_rate_m{m}"), success, 0.03).with_detail(format!("n = {n}")),
        );
        out.check(Check::at_most(format!("threshold_false_positive_rate_m{m}"), false_pos, 0.05));
        summary.push(json!({ "m": m, "n": n, "success_rate": success, "false_positive_rate": false_pos,
            "advisory_lhs": lhs, "advisory_rhs": rhs, "advisory_satisfied": lhs < rhs }));
    }
    out.metric("eps", eps);
    out.metric("settings", summary);
    Ok(out)
}
