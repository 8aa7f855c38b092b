//! Covering-number calculators at known values, and audits of greedy nets.

use std::f64::consts::E;
use std::sync::Arc;

use cqlearn_core::concepts::{ConceptKind, ConceptOutput, ConceptRef, Label, TableConcept};
use cqlearn_core::nets::{bound_fatshatter, bound_full_unitary, bound_lqc, farthest_point_net, NetNorm};
use cqlearn_core::qcore::random::{random_density, random_projector};
use cqlearn_core::qcore::{operator_norm, trace_norm, ComplexMatrix};
use cqlearn_core::StreamRng;
use rand::Rng;
use serde_json::json;

use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

/// `log₁₀ 2 + D·log₂(4eBn/(Dε))·log₁₀(4nB²/ε²)`, evaluated term by term.
fn fat_shattering_log10(n: f64, b: f64, eps: f64, d: f64) -> f64 {
    let exponent = d * ((4.0 * E * b * n) / (d * eps)).ln() / 2f64.ln();
    2f64.log10() + exponent * ((4.0 * n * b * b) / (eps * eps)).log10()
}

fn random_class(rng: &mut StreamRng) -> Result<(Vec<ConceptRef>, Vec<Label>, ConceptKind), ExperimentError> {
    let size = rng.random_range(2..=200usize);
    let labels: Vec<Label> = (0..rng.random_range(1..=6)).map(|i| Label::scalar(i as f64)).collect();
    let kind = if rng.random() { ConceptKind::Projector } else { ConceptKind::State };
    let d = rng.random_range(2..=3usize);
    let pool = (0..size)
        .map(|id| {
            let entries = labels
                .iter()
                .map(|x| {
                    let out = match kind {
                        ConceptKind::Projector => {
                            ConceptOutput::Projector(random_projector(d, rng.random_range(0..=d), rng))
                        }
                        ConceptKind::State => ConceptOutput::State(random_density(d, rng.random_range(1..=d), rng)),
                    };
                    (x.clone(), out)
                })
                .collect();
            Ok(Arc::new(TableConcept::new(entries, id as f64)?) as ConceptRef)
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok((pool, labels, kind))
}

/// Mean per-label distance, computed here rather than through the net module.
fn distance(a: &[ComplexMatrix], b: &[ComplexMatrix], kind: ConceptKind) -> Result<f64, ExperimentError> {
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        total += match kind {
            ConceptKind::Projector => operator_norm(&diff)?,
            ConceptKind::State => trace_norm(&diff)?,
        };
    }
    Ok(total / a.len() as f64)
}

struct NetAudit {
    pool: usize,
    labels: usize,
    eps: f64,
    members: usize,
    radius: f64,
    min_separation: f64,
    builtin_audit: bool,
}

fn audit_one(rng: &mut StreamRng) -> Result<NetAudit, ExperimentError> {
    let (pool, labels, kind) = random_class(rng)?;
    let eps = rng.random_range(0.05..0.8);
    let net = farthest_point_net(pool.clone(), &labels, eps, NetNorm::for_kind(kind))?;
    let outputs: Vec<Vec<ComplexMatrix>> = pool
        .iter()
        .map(|c| labels.iter().map(|x| Ok(c.eval(x)?.matrix().clone())).collect::<Result<_, ExperimentError>>())
        .collect::<Result<_, _>>()?;
    let members = net.member_indices();
    let mut radius = 0.0f64;
    for out in &outputs {
        let mut best = f64::INFINITY;
        for &m in members {
            best = best.min(distance(out, &outputs[m], kind)?);
        }
        radius = radius.max(best);
    }
    let mut min_separation = f64::INFINITY;
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            min_separation = min_separation.min(distance(&outputs[a], &outputs[b], kind)?);
        }
    }
    Ok(NetAudit {
        pool: pool.len(),
        labels: labels.len(),
        eps,
        members: members.len(),
        radius,
        min_separation,
        builtin_audit: net.audit()?,
    })
}

pub fn covering_bounds(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let mut out = Outcome::new(&["item", "pool", "labels", "eps", "members", "value", "passed"]);
    let lqc = bound_lqc(4, 2, 0.5).log10_bound;
    let unitary = bound_full_unitary(1, 6.0).log10_bound;
    let fat = bound_fatshatter(16, 1.0, 1.0, 1.0).log10_bound;
    let fat_oracle = fat_shattering_log10(16.0, 1.0, 1.0, 1.0);
    out.check(
        Check::at_most("lqc_bound_log10_error", (lqc - 89.54).abs(), 0.01).with_detail(format!("log10 = {lqc:.4}")),
    );
    out.check(Check::at_most("full_unitary_bound_value_error", (10f64.powf(unitary) - 1.0).abs(), 1e-12));
    out.check(
        Check::at_most("fat_shattering_bound_vs_direct_evaluation", (fat - fat_oracle).abs(), 1e-9)
            .with_detail(format!("log10 = {fat:.4}")),
    );
    for (name, v) in [("lqc_log10", lqc), ("full_unitary_log10", unitary), ("fat_shattering_log10", fat)] {
        out.table.push(vec![
            cell(name),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            cell(v),
            String::new(),
        ]);
    }

    let audits = ctx.try_par_map(ctx.trials, |i| audit_one(&mut ctx.rng(0, i)))?;
    let mut failures = 0u64;
    for a in &audits {
        let ok = a.builtin_audit && a.radius <= a.eps + 1e-12 && a.min_separation > a.eps;
        failures += u64::from(!ok);
        out.table.push(vec![
            cell("net_audit"),
            cell(a.pool),
            cell(a.labels),
            cell(a.eps),
            cell(a.members),
            cell(a.radius),
            cell(ok),
        ]);
        out.trace.push(json!({ "pool": a.pool, "members": a.members, "radius": a.radius, "eps": a.eps,
            "min_separation": a.min_separation }));
    }
    out.metric("lqc_log10", lqc);
    out.metric("full_unitary_log10", unitary);
    out.metric("fat_shattering_log10", fat);
    out.check(
        Check::at_most("greedy_net_coverage_failures", failures as f64, 0.0)
            .with_detail(format!("{} finite classes of size <= 200", audits.len())),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fat_shattering_spot_value() {
        assert!((fat_shattering_log10(16.0, 1.0, 1.0, 1.0) - 13.75).abs() < 0.01);
    }
}
