//! End-to-end learning on a sampled training set, uniform convergence of empirical
//! risks, and the sample-size scaling of the risk-minimization schedule.

use std::sync::Arc;

use cqlearn_core::algorithms::EstimatorBackend;
use cqlearn_core::concepts::{
    ConceptClass, ConceptFamily, ConceptRef, DepolarizedSource, FiniteSource, IntervalConcept, IntervalFamily, Label,
    NormalizedProjector,
};
use cqlearn_core::learner::{learn_projector_class, uniform_convergence_experiment, LearnerConfig};
use cqlearn_core::simstate::Backend;
use serde_json::json;

use super::rate;
use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

/// Label points `k/15` for `k = 0..15`.
const GRID_POINTS: usize = 16;
const TARGET: IntervalConcept = IntervalConcept { a: 0.25, b: 0.7 };
const DEFAULT_BLOCK: u64 = 200;

fn grid_labels() -> Vec<Label> {
    (0..GRID_POINTS).map(|k| Label::scalar(k as f64 / (GRID_POINTS - 1) as f64)).collect()
}

/// Uniform grid labels with the basis state selected by the target interval.
fn interval_source() -> Result<FiniteSource, ExperimentError> {
    let channel: ConceptRef = Arc::new(NormalizedProjector(Arc::new(TARGET)));
    Ok(FiniteSource::uniform(grid_labels(), channel, Some(true))?)
}

pub fn end_to_end_erm(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let eps = ctx.eps_or(0.15);
    let delta = ctx.delta_or(0.25);
    let base = ctx.cfg.algorithm(eps, delta, 1, EstimatorBackend::CommutingDp);
    let t = base.erm_thresholds();
    let n = ctx.cfg.n.unwrap_or(6 * t * base.failure_budget(t) * DEFAULT_BLOCK);
    let source = interval_source()?;
    let cls = ConceptClass::family(Arc::new(IntervalFamily::new(0.0, 1.0)?));
    let reports = ctx.try_par_map(ctx.trials, |run| {
        let cfg = LearnerConfig {
            algorithm: cqlearn_core::algorithms::AlgorithmConfig { stream: run, ..base.clone() },
            n,
            backend: ctx.cfg.backend.unwrap_or(Backend::Commuting),
            net_eps: None,
            net_cap: ctx.cfg.net_cap,
            net_sample_budget: ctx.cfg.net_sample_budget,
            net_prefix: ctx.cfg.net_prefix,
            mu_source: cqlearn_core::algorithms::MuSource::Estimated,
            mc_samples: ctx.cfg.mc_samples,
        };
        Ok(learn_projector_class(&source, &cls, &cfg)?)
    })?;
    let mut out = Outcome::new(&[
        "run",
        "net_size",
        "selected",
        "selected_true_risk",
        "inf_risk",
        "excess_risk",
        "target",
        "success",
    ]);
    for (run, r) in reports.iter().enumerate() {
        let selected_risk = r.selected.map(|s| r.concepts[s].true_risk);
        let opt = |x: Option<f64>| x.map(cell).unwrap_or_default();
        out.table.push(vec![
            cell(run),
            cell(r.net_size),
            r.selected.map(cell).unwrap_or_default(),
            opt(selected_risk),
            cell(r.inf_risk),
            opt(r.excess_risk),
            cell(r.target),
            cell(r.success),
        ]);
        out.trace.push(serde_json::to_value(r)?);
    }
    let excess: Vec<f64> = reports.iter().filter_map(|r| r.excess_risk).collect();
    let mean_excess = excess.iter().sum::<f64>() / excess.len().max(1) as f64;
    out.metric("n", n);
    out.metric("schedule", reports[0].schedule);
    out.metric("mean_net_size", reports.iter().map(|r| r.net_size as f64).sum::<f64>() / reports.len() as f64);
    out.metric("mean_excess_risk", mean_excess);
    out.metric("degenerate_runs", reports.iter().filter(|r| r.degenerate).count());
    out.check(
        Check::at_least(
            "end_to_end_erm_excess_risk_within_seven_eps_rate",
            rate(reports.iter().map(|r| r.success)),
            1.0 - delta,
        )
        .with_detail(format!("interval family, n = {n}, eps = {eps}")),
    );
    out.check(Check::reported("end_to_end_erm_mean_excess_risk", mean_excess));
    Ok(out)
}

const CONVERGENCE_GRID: [u64; 6] = [100, 400, 1600, 6400, 25_600, 102_400];
const CONVERGENCE_CLASS: usize = 10;

pub fn uniform_convergence(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let eps = ctx.eps_or(0.2);
    let mut rng = ctx.rng(0, 0);
    let family = IntervalFamily::new(0.0, 1.0)?;
    let members = (0..CONVERGENCE_CLASS).map(|_| family.sample(&mut rng)).collect::<Result<Vec<_>, _>>()?;
    let cls = ConceptClass::finite(members)?;
    // depolarizing keeps every risk strictly inside (0, 1)
    let source = DepolarizedSource::new(interval_source()?, 0.2)?;
    let curve = uniform_convergence_experiment(
        &source,
        &cls,
        &CONVERGENCE_GRID,
        ctx.trials as usize,
        eps,
        ctx.cfg.mc_samples,
        &mut rng,
    )?;
    let mut out = Outcome::new(&["n", "median", "mean", "q90", "exceed_freq", "bound"]);
    for p in &curve.points {
        out.table.push(vec![cell(p.n), cell(p.median), cell(p.mean), cell(p.q90), cell(p.exceed_freq), cell(p.bound)]);
    }
    out.metric("curve", &curve);
    out.check(Check::at_most(
        "sup_gap_median_increases",
        curve.points.windows(2).filter(|w| w[1].median > w[0].median).count() as f64,
        0.0,
    ));
    let informative = curve.points.iter().filter(|p| p.bound < 1.0).count();
    out.check(
        Check::at_least("exceedance_within_uniform_bound", f64::from(u8::from(curve.within_bound())), 1.0)
            .with_detail(format!("{informative} sample sizes with an informative bound")),
    );
    Ok(out)
}

/// Smallest block length satisfying the sizing advisory at search precision `ε/4`.
fn advised_block(m: usize, eps: f64, c1: f64, c2: f64) -> u64 {
    let lhs = ((m as f64).ln() + c2).powi(2);
    (lhs / (c1 * (eps / 4.0).powi(2))).floor() as u64 + 1
}

pub fn sample_complexity_slope(ctx: &Context) -> Result<Outcome, ExperimentError> {
    const M: usize = 8;
    let delta = ctx.delta_or(0.25);
    let mut out = Outcome::new(&["eps", "thresholds", "pairs_per_threshold", "block_len", "required_n"]);
    let mut points = Vec::new();
    for eps in [0.1, 0.05] {
        let alg = cqlearn_core::algorithms::AlgorithmConfig {
            eps,
            ..ctx.cfg.algorithm(eps, delta, 1, EstimatorBackend::CommutingDp)
        };
        let t = alg.erm_thresholds();
        let k = alg.failure_budget(t);
        let l = advised_block(M, eps, alg.c_cal, alg.c_offset);
        let n = 6 * t * k * l;
        out.table.push(vec![cell(eps), cell(t), cell(k), cell(l), cell(n)]);
        points.push((eps, n));
    }
    let slope = (points[1].1 as f64 / points[0].1 as f64).ln() / (points[0].0 / points[1].0).ln();
    out.metric("points", json!(points));
    out.metric("loglog_slope", slope);
    out.check(Check::reported("required_n_loglog_slope_in_inverse_eps", slope).with_detail(format!("m = {M}")));
    Ok(out)
}
