//! Poisson-binomial engine, gentle-event faithfulness, the exponential tail bound and
//! the χ² gentleness inequality.

use cqlearn_core::pbnoise::{
    bhattacharyya, conditional_pmf_reject, gentleness_check, pb_pmf, smoothed_tail, smoothed_tail_exp_bound,
    ExponentialNoise,
};
use cqlearn_core::qcore::random::{random_density, random_projector};
use cqlearn_core::qcore::{fidelity, DensityMatrix, Projector};
use cqlearn_core::simstate::{build_gentle_event, Backend, ProductState, Runs, StateHandle};
use cqlearn_core::StreamRng;
use rand::Rng;
use serde_json::json;

use super::{log_uniform, random_probs};
use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

/// `C(n,k) pᵏ(1−p)ⁿ⁻ᵏ` through logarithms, a route independent of the convolution.
fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    (0..=n)
        .map(|k| {
            let hits = if k == 0 { 0.0 } else { k as f64 * p.ln() };
            let misses = if k == n { 0.0 } else { (n - k) as f64 * (-p).ln_1p() };
            (ln_fact[n] - ln_fact[k] - ln_fact[n - k] + hits + misses).exp()
        })
        .collect()
}

/// Sums the probability of every one of the `2ⁿ` outcomes into its count.
fn enumerated_pmf(probs: &[f64]) -> Vec<f64> {
    let n = probs.len();
    let mut pmf = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let w: f64 = probs.iter().enumerate().map(|(i, &p)| if mask >> i & 1 == 1 { p } else { 1.0 - p }).product();
        pmf[mask.count_ones() as usize] += w;
    }
    pmf
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn pb_exactness(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let per_n = ctx.trials;
    let mut out = Outcome::new(&["oracle", "n", "instance", "max_abs_error"]);
    let binom = ctx.try_par_map(200 * per_n, |job| {
        let (n, i) = (1 + (job / per_n) as usize, job % per_n);
        let mut rng = ctx.rng(0, job);
        let p = if i == 0 { 0.5 } else { rng.random::<f64>() };
        let got = pb_pmf(&vec![p; n])?;
        Ok((n, i, max_abs_diff(got.pmf(), &binomial_pmf(n, p))))
    })?;
    let enumerated = ctx.try_par_map(16 * per_n, |job| {
        let (n, i) = (1 + (job / per_n) as usize, job % per_n);
        let probs = random_probs(n, &mut ctx.rng(1, job));
        let got = pb_pmf(&probs)?;
        Ok((n, i, max_abs_diff(got.pmf(), &enumerated_pmf(&probs))))
    })?;
    for (name, rows) in [("binomial", &binom), ("enumeration", &enumerated)] {
        for &(n, i, err) in rows.iter() {
            out.table.push(vec![cell(name), cell(n), cell(i), cell(err)]);
        }
        let worst = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        out.metric(&format!("{name}_max_abs_error"), worst);
    }
    let worst = |rows: &[(usize, u64, f64)]| rows.iter().map(|r| r.2).fold(0.0, f64::max);
    out.check(Check::at_most("pb_matches_binomial_pmf", worst(&binom), 1e-12).with_detail("equal p_i, n = 1..200"));
    out.check(Check::at_most("pb_matches_outcome_enumeration", worst(&enumerated), 1e-12).with_detail("n = 1..16"));
    Ok(out)
}

/// A small dense instance: random qubit states and projectors, `θ ∈ (0, 1)`.
struct DenseInstance {
    sites: Vec<DensityMatrix>,
    projectors: Vec<Projector>,
    theta: f64,
}

fn dense_instance(rng: &mut StreamRng) -> DenseInstance {
    let n = rng.random_range(1..=6usize);
    let sites = (0..n).map(|_| random_density(2, rng.random_range(1..=2), rng)).collect();
    let projectors = (0..n)
        .map(|_| match rng.random_range(0..6u8) {
            0 => Projector::zero(2),
            1 => Projector::identity(2),
            _ => random_projector(2, 1, rng),
        })
        .collect();
    DenseInstance { sites, projectors, theta: rng.random::<f64>() }
}

struct DenseResult {
    n: usize,
    theta: f64,
    expectation: f64,
    smoothed: f64,
    bound: f64,
    fidelity: Option<f64>,
    bc: Option<f64>,
}

fn run_dense_instance(ctx: &Context, inst: &DenseInstance) -> Result<DenseResult, ExperimentError> {
    let n = inst.sites.len();
    let state = ProductState::from_sites(inst.sites.clone(), Backend::Dense, &ctx.cfg.sim)?;
    let ev = build_gentle_event(Runs::from_sites(inst.projectors.clone()), inst.theta, ctx.cfg.noise_scale)?;
    let mut handle = StateHandle::new(state, &ctx.cfg.sim)?;
    let before = handle.dense_state().expect("dense backend");
    // exact on dense states, so the generator is never consulted
    let expectation = handle.expect_event(&ev, &mut StreamRng::new(0, 0))?.value;
    let probs: Vec<f64> =
        inst.sites.iter().zip(&inst.projectors).map(|(s, p)| s.probability(p)).collect::<Result<_, _>>()?;
    let pb = pb_pmf(&probs)?;
    let smoothed = smoothed_tail(&pb, ev.noise(), ev.count_threshold());
    let bound = smoothed_tail_exp_bound(&probs, ev.lambda(), inst.theta);
    // below this the renormalized reject branch is dominated by roundoff
    let reject_mass: f64 = pb.pmf().iter().enumerate().map(|(t, &w)| w * ev.reject_coefficient(t as u64)).sum();
    let (fid, bc) = match conditional_pmf_reject(&pb, ev.noise(), ev.count_threshold()) {
        Ok(cond) if reject_mass >= MIN_REJECT_MASS => {
            handle.post_select(&ev, false)?;
            let after = handle.dense_state().expect("dense backend");
            (Some(fidelity(&before, &after)?), Some(bhattacharyya(&cond, pb.pmf())?))
        }
        _ => (None, None),
    };
    Ok(DenseResult { n, theta: inst.theta, expectation, smoothed, bound, fidelity: fid, bc })
}

const DENSE_INSTANCES: u64 = 500;
const MIN_REJECT_MASS: f64 = 1e-9;

fn dense_results(ctx: &Context) -> Result<Vec<DenseResult>, ExperimentError> {
    ctx.try_par_map(DENSE_INSTANCES, |i| run_dense_instance(ctx, &dense_instance(&mut ctx.rng(0, i))))
}

pub fn gentle_event_faithfulness(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let results = ctx.try_par_map(ctx.trials, |i| run_dense_instance(ctx, &dense_instance(&mut ctx.rng(0, i))))?;
    let mut out =
        Outcome::new(&["instance", "n", "theta", "expectation", "smoothed_tail", "fidelity", "bhattacharyya"]);
    let (mut worst_tail, mut worst_fid, mut skipped) = (0.0f64, 0.0f64, 0u64);
    for (i, r) in results.iter().enumerate() {
        worst_tail = worst_tail.max((r.expectation - r.smoothed).abs());
        match (r.fidelity, r.bc) {
            (Some(f), Some(b)) => worst_fid = worst_fid.max((f - b).abs()),
            _ => skipped += 1,
        }
        let opt = |x: Option<f64>| x.map(cell).unwrap_or_default();
        out.table.push(vec![
            cell(i),
            cell(r.n),
            cell(r.theta),
            cell(r.expectation),
            cell(r.smoothed),
            opt(r.fidelity),
            opt(r.bc),
        ]);
    }
    out.metric("instances", results.len());
    out.metric("reject_branch_degenerate", skipped);
    out.check(
        Check::at_most("event_expectation_matches_smoothed_tail", worst_tail, 1e-10)
            .with_detail(format!("{} dense instances, n <= 6, d = 2", results.len())),
    );
    out.check(
        Check::at_most("reject_fidelity_matches_bhattacharyya", worst_fid, 1e-8)
            .with_detail(format!("{skipped} instances with reject probability below {MIN_REJECT_MASS:e} skipped")),
    );
    Ok(out)
}

pub fn exponential_tail_bound(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let dense = dense_results(ctx)?;
    let classical = ctx.try_par_map(ctx.trials, |i| {
        let mut rng = ctx.rng(1, i);
        let n = log_uniform(1, 2000, &mut rng);
        let probs = random_probs(n as usize, &mut rng);
        let lambda = rng.random_range(1e-3..0.999);
        let theta = rng.random_range(0.0..1.2);
        let pb = pb_pmf(&probs)?;
        let tail = smoothed_tail(&pb, &ExponentialNoise::new(lambda)?, theta * n as f64);
        Ok((n, lambda, theta, tail, smoothed_tail_exp_bound(&probs, lambda, theta)))
    })?;
    let mut out = Outcome::new(&["source", "instance", "n", "lambda", "theta", "tail", "bound"]);
    let violates = |tail: f64, bound: f64| tail > bound * (1.0 + 1e-12) + 1e-300;
    let mut violations = 0u64;
    for (i, r) in dense.iter().enumerate() {
        violations += u64::from(violates(r.expectation, r.bound));
        let lambda = 1.0 / (ctx.cfg.noise_scale * (r.n as f64).sqrt());
        out.table.push(vec![
            cell("dense"),
            cell(i),
            cell(r.n),
            cell(lambda),
            cell(r.theta),
            cell(r.expectation),
            cell(r.bound),
        ]);
    }
    for (i, &(n, lambda, theta, tail, bound)) in classical.iter().enumerate() {
        violations += u64::from(violates(tail, bound));
        out.table.push(vec![cell("classical"), cell(i), cell(n), cell(lambda), cell(theta), cell(tail), cell(bound)]);
    }
    out.metric("dense_instances", dense.len());
    out.metric("classical_instances", classical.len());
    let informative = classical.iter().filter(|r| r.4 < 1.0).count();
    out.metric("classical_informative_bounds", informative);
    out.check(Check::at_most("tail_bound_violations", violations as f64, 0.0).with_detail(format!(
        "{} dense and {} classical instances",
        dense.len(),
        classical.len()
    )));
    Ok(out)
}

/// Calibration constant of the χ² gentleness inequality.
const C_CAL: f64 = 10.0;

pub fn pb_gentleness(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let reports = ctx.try_par_map(ctx.trials, |i| {
        let mut rng = ctx.rng(0, i);
        let n = log_uniform(1, 500, &mut rng) as usize;
        let pb = pb_pmf(&random_probs(n, &mut rng))?;
        let scale = 1.0f64.max(pb.stddev());
        let noise = ExponentialNoise::new(rng.random_range(0.05..0.999) / scale)?;
        // start somewhere above the mean, then walk up until Pr[B] < 1/4
        let mut threshold = pb.mean() + rng.random_range(0.0..3.0) * scale + rng.random_range(0.0..3.0) * noise.mean();
        while smoothed_tail(&pb, &noise, threshold) >= 0.25 {
            threshold += noise.mean();
        }
        Ok((n, noise.lambda(), threshold, gentleness_check(&pb, &noise, threshold, C_CAL)?))
    })?;
    let mut out = Outcome::new(&["instance", "n", "lambda", "count_threshold", "p_b", "chi2", "bound_rhs", "ratio"]);
    let mut violations = 0u64;
    let mut max_ratio = 0.0f64;
    for (i, (n, lambda, threshold, r)) in reports.iter().enumerate() {
        violations += u64::from(!r.ok);
        max_ratio = max_ratio.max(r.ratio);
        out.table.push(vec![
            cell(i),
            cell(n),
            cell(lambda),
            cell(threshold),
            cell(r.p_b),
            cell(r.chi2),
            cell(r.bound_rhs),
            cell(r.ratio),
        ]);
        if r.ratio >= 1.0 {
            out.trace.push(json!({ "instance": i, "n": n, "lambda": lambda, "ratio": r.ratio }));
        }
    }
    out.metric("c_cal", C_CAL);
    out.metric("max_ratio", max_ratio);
    out.check(Check::at_most("chi2_gentleness_violations", violations as f64, 0.0).with_detail(format!("C = {C_CAL}")));
    out.check(Check::reported("chi2_gentleness_max_ratio", max_ratio));
    Ok(out)
}
