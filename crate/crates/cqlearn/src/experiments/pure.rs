//! Error rate of the pure-state maximum-likelihood learner as the sample grows.

use std::sync::Arc;

use cqlearn_core::algorithms::pure_state_realizable_learner;
use cqlearn_core::concepts::{ConceptOutput, ConceptRef, Label, TableConcept};
use cqlearn_core::qcore::random::haar_pure_state;
use cqlearn_core::qcore::{trace_distance, DensityMatrix};
use rand::Rng;
use serde_json::json;

use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

const CLASS_SIZE: usize = 16;
const LABELS: usize = 4;
const SAMPLE_SIZES: [usize; 5] = [25, 50, 100, 200, 400];

/// Least-squares `Ω` in `log₂ err ≈ a − Ω·ε²T` over the points with nonzero error.
fn fit_rate(eps: f64, points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|p| p.1 > 0.0).map(|&(t, e)| (eps * eps * t as f64, e.log2())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

pub fn pure_state_learner(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let eps = ctx.eps_or(0.2);
    let labels: Vec<Label> = (0..LABELS).map(|i| Label::scalar(i as f64)).collect();
    let runs = ctx.try_par_map(ctx.trials, |run| {
        let mut rng = ctx.rng(0, run);
        let tables: Vec<Vec<DensityMatrix>> =
            (0..CLASS_SIZE).map(|_| (0..LABELS).map(|_| haar_pure_state(2, &mut rng)).collect()).collect();
        let class: Vec<ConceptRef> = tables
            .iter()
            .enumerate()
            .map(|(id, t)| {
                let entries = labels.iter().cloned().zip(t.iter().map(|s| ConceptOutput::State(s.clone()))).collect();
                Ok(Arc::new(TableConcept::new(entries, id as f64)?) as ConceptRef)
            })
            .collect::<Result<_, ExperimentError>>()?;
        let target = rng.random_range(0..CLASS_SIZE);
        let gap = |h: usize| -> Result<f64, ExperimentError> {
            let mut total = 0.0;
            for (a, b) in tables[h].iter().zip(&tables[target]) {
                total += trace_distance(a, b)?;
            }
            Ok(total / LABELS as f64)
        };
        SAMPLE_SIZES
            .iter()
            .map(|&t| {
                let data: Vec<(Label, DensityMatrix)> = (0..t)
                    .map(|_| {
                        let x = rng.random_range(0..LABELS);
                        (labels[x].clone(), tables[target][x].clone())
                    })
                    .collect();
                let report = pure_state_realizable_learner(&data, &class, &mut rng)?;
                gap(report.selected)
            })
            .collect::<Result<Vec<f64>, _>>()
    })?;
    let mut out = Outcome::new(&["samples", "runs", "errors", "error_rate", "std_error"]);
    let mut curve = Vec::new();
    for (i, &t) in SAMPLE_SIZES.iter().enumerate() {
        let errors = runs.iter().filter(|r| r[i] > 2.0 * eps).count();
        let p = errors as f64 / runs.len() as f64;
        let se = (p * (1.0 - p) / runs.len() as f64).sqrt();
        out.table.push(vec![cell(t), cell(runs.len()), cell(errors), cell(p), cell(se)]);
        curve.push((t, p, se));
    }
    for (run, gaps) in runs.iter().enumerate() {
        out.trace.push(json!({ "run": run, "gaps": gaps }));
    }
    // an increase counts only when it clears the combined binomial noise of both points
    let increases = curve.windows(2).filter(|w| w[1].1 > w[0].1 + 2.0 * (w[0].2.hypot(w[1].2)).max(1e-12)).count();
    let last = curve.last().expect("nonempty grid");
    let points: Vec<(usize, f64)> = curve.iter().map(|c| (c.0, c.1)).collect();
    let omega = fit_rate(eps, &points);
    out.metric("eps", eps);
    out.metric("error_rates", &points);
    out.metric("fitted_omega", omega);
    out.check(
        Check::at_most("pure_learner_error_at_largest_sample", last.1, 0.05).with_detail(format!("T = {}", last.0)),
    );
    out.check(Check::at_most("pure_learner_error_increases", increases as f64, 0.0));
    out.check(Check::at_least("pure_learner_error_drop_across_grid", curve[0].1 - last.1, 0.0));
    out.check(Check::reported("pure_learner_fitted_omega", omega.unwrap_or(f64::NAN)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_exponent() {
        let pts: Vec<(usize, f64)> =
            [25, 50, 100].iter().map(|&t| (t, 0.5 * 2f64.powf(-0.8 * 0.04 * t as f64))).collect();
        assert!((fit_rate(0.2, &pts).unwrap() - 0.8).abs() < 1e-9);
        assert_eq!(fit_rate(0.2, &[(25, 0.0), (50, 0.1)]), None);
    }
}
