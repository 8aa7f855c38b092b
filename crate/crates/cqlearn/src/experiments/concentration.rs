//! Exceedance frequency of batch-mean deviations against the without-replacement bound.

use cqlearn_core::batching::{deviation_bound, verify_without_replacement};
use cqlearn_core::StreamRng;
use rand::Rng;
use serde_json::json;

use crate::registry::{cell, Check, Context, ExperimentError, Outcome};

const LENS: [u64; 2] = [200, 1000];
const BATCHES: [u64; 2] = [2, 8];
const POPULATIONS: [u64; 2] = [4, 32];
const EPS: [f64; 2] = [0.1, 0.2];
/// Trials of one setting are split into this many independently seeded chunks.
const CHUNKS: u64 = 10;

#[derive(Clone, Copy, Debug)]
struct Setting {
    len: u64,
    batches: u64,
    populations: u64,
    eps: f64,
}

fn grid() -> Vec<Setting> {
    let mut out = Vec::new();
    for len in LENS {
        for batches in BATCHES {
            for populations in POPULATIONS {
                for eps in EPS {
                    out.push(Setting { len, batches, populations, eps });
                }
            }
        }
    }
    out
}

/// `count` values in `[0, 1]`: Bernoulli, uniform or two-level.
fn population(count: u64, rng: &mut StreamRng) -> Vec<f64> {
    let kind = rng.random_range(0..3u8);
    let p = rng.random::<f64>();
    (0..count)
        .map(|_| match kind {
            0 => f64::from(u8::from(rng.random::<f64>() < p)),
            1 => rng.random(),
            _ => {
                if rng.random::<f64>() < p {
                    0.25
                } else {
                    0.75
                }
            }
        })
        .collect()
}

pub fn batch_concentration(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let settings = grid();
    let per_chunk = ctx.trials.div_ceil(CHUNKS);
    let chunks = ctx.try_par_map(settings.len() as u64 * CHUNKS, |job| {
        let (s, chunk) = (job / CHUNKS, job % CHUNKS);
        let st = settings[s as usize];
        let trials = per_chunk.min(ctx.trials.saturating_sub(chunk * per_chunk));
        if trials == 0 {
            return Ok(0);
        }
        // every chunk of a setting sees the same populations
        let mut pop_rng = ctx.rng(s, u32::MAX as u64);
        let n = 3 * st.batches * st.len;
        let pops: Vec<Vec<f64>> = (0..st.populations).map(|_| population(n, &mut pop_rng)).collect();
        let report = verify_without_replacement(&pops, st.batches, st.len, st.eps, trials, &mut ctx.rng(s, chunk))?;
        Ok(report.exceedances)
    })?;
    let mut out =
        Outcome::new(&["len", "batches", "populations", "eps", "trials", "exceedances", "frequency", "bound", "limit"]);
    let mut failures = 0u64;
    let mut summary = Vec::new();
    for (s, st) in settings.iter().enumerate() {
        let exceed: u64 = chunks[s * CHUNKS as usize..(s + 1) * CHUNKS as usize].iter().sum();
        let freq = exceed as f64 / ctx.trials as f64;
        let bound = deviation_bound(st.batches, st.populations, st.len, st.eps);
        let p_ref = bound.min(1.0);
        let limit = bound + 3.0 * (p_ref * (1.0 - p_ref) / ctx.trials as f64).sqrt();
        failures += u64::from(freq > limit);
        out.table.push(vec![
            cell(st.len),
            cell(st.batches),
            cell(st.populations),
            cell(st.eps),
            cell(ctx.trials),
            cell(exceed),
            cell(freq),
            cell(bound),
            cell(limit),
        ]);
        summary.push(json!({ "len": st.len, "batches": st.batches, "populations": st.populations, "eps": st.eps,
            "frequency": freq, "bound": bound }));
    }
    out.metric("settings", summary);
    out.check(Check::at_most("batch_deviation_settings_over_bound", failures as f64, 0.0).with_detail(format!(
        "{} settings, {} trials each",
        settings.len(),
        ctx.trials
    )));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_sixteen_settings() {
        assert_eq!(grid().len(), 16);
    }
}
