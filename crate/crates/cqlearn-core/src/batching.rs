//! Disjoint batches drawn without replacement, and the concentration of batch
//! means around population means.
//!
//! A plan is one uniformly random shuffle of `[n]` cut into `K` consecutive slices
//! of length `l`; only the first `K·l` positions of the shuffle are ever realized.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::draws::multivariate_hypergeometric;
use crate::rng::{RngPosition, StreamRng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BatchError {
    #[error("{batches} batches of {len} need {needed} items, but the population has {n}")]
    TooLarge { batches: u64, len: u64, needed: u128, n: u64 },
    #[error("populations must be nonempty and share one length")]
    RaggedPopulations,
    #[error("population value {0} is outside [0, 1]")]
    OutOfRange(f64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub n: u64,
    pub batches: u64,
    pub len: u64,
    /// Generator position the plan was drawn from.
    pub origin: RngPosition,
    pub indices: Vec<Vec<u64>>,
}

impl BatchPlan {
    /// Whether `n ≥ 3Kl`, the population size the deviation bound is stated for.
    pub fn meets_sizing(&self) -> bool {
        self.n as u128 >= 3 * self.batches as u128 * self.len as u128
    }
}

fn check_size(n: u64, batches: u64, len: u64) -> Result<(), BatchError> {
    let needed = batches as u128 * len as u128;
    if needed > n as u128 {
        return Err(BatchError::TooLarge { batches, len, needed, n });
    }
    Ok(())
}

/// `K` disjoint uniformly random batches of `l` indices from `[n]`.
///
/// Partial Fisher–Yates with a sparse swap table, so memory is `O(K·l)` however large `n` is.
pub fn draw_batches(n: u64, batches: u64, len: u64, rng: &mut StreamRng) -> Result<BatchPlan, BatchError> {
    check_size(n, batches, len)?;
    let origin = rng.position();
    let total = batches * len;
    let mut swaps: BTreeMap<u64, u64> = BTreeMap::new();
    let mut flat = Vec::with_capacity(total as usize);
    for i in 0..total {
        let j = rng.random_range(i..n);
        let vi = *swaps.get(&i).unwrap_or(&i);
        let vj = *swaps.get(&j).unwrap_or(&j);
        swaps.insert(j, vi);
        flat.push(vj);
    }
    let l = len as usize;
    let indices = (0..batches as usize).map(|b| flat[b * l..(b + 1) * l].to_vec()).collect();
    Ok(BatchPlan { n, batches, len, origin, indices })
}

/// Batches over a population given as runs of interchangeable items.
///
/// Returns, for each batch, `(run index, count)` pairs. Equal in law to
/// [`draw_batches`] followed by counting which run each index falls in.
pub fn draw_run_batches<R: Rng + ?Sized>(
    run_counts: &[u64],
    batches: u64,
    len: u64,
    rng: &mut R,
) -> Result<Vec<Vec<(usize, u64)>>, BatchError> {
    let n: u64 = run_counts.iter().sum();
    check_size(n, batches, len)?;
    let mut left = run_counts.to_vec();
    let mut out = Vec::with_capacity(batches as usize);
    for _ in 0..batches {
        let take = multivariate_hypergeometric(&left, len, rng);
        for (l, t) in left.iter_mut().zip(&take) {
            *l -= t;
        }
        out.push(take.into_iter().enumerate().filter(|&(_, c)| c > 0).collect());
    }
    Ok(out)
}

/// `2Km·e^{−2lε²/4}`; values above 1 are returned as they are.
pub fn deviation_bound(batches: u64, populations: u64, len: u64, eps: f64) -> f64 {
    2.0 * batches as f64 * populations as f64 * (-2.0 * len as f64 * eps * eps / 4.0).exp()
}

/// Largest `|batch mean − population mean|` over populations and batches of a plan.
pub fn max_deviation(populations: &[Vec<f64>], plan: &BatchPlan) -> f64 {
    let mut worst = 0.0f64;
    for pop in populations {
        let mu = pop.iter().sum::<f64>() / pop.len() as f64;
        for batch in &plan.indices {
            let mean = batch.iter().map(|&i| pop[i as usize]).sum::<f64>() / batch.len() as f64;
            worst = worst.max((mean - mu).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub trials: u64,
    pub exceedances: u64,
    pub empirical_freq: f64,
    pub std_error: f64,
    pub bound: f64,
    /// Empirical frequency ≤ bound + 3 standard errors.
    pub pass: bool,
    /// Whether `n ≥ 3Kl` held.
    pub sizing_ok: bool,
}

/// Monte-Carlo frequency of `max deviation ≥ ε` over fresh plans, against [`deviation_bound`].
pub fn verify_without_replacement(
    populations: &[Vec<f64>],
    batches: u64,
    len: u64,
    eps: f64,
    trials: u64,
    rng: &mut StreamRng,
) -> Result<ConcentrationReport, BatchError> {
    let n = populations.first().map(Vec::len).ok_or(BatchError::RaggedPopulations)?;
    if n == 0 || populations.iter().any(|p| p.len() != n) {
        return Err(BatchError::RaggedPopulations);
    }
    if let Some(&bad) = populations.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(BatchError::OutOfRange(bad));
    }
    check_size(n as u64, batches, len)?;
    let mut exceedances = 0;
    for _ in 0..trials {
        let plan = draw_batches(n as u64, batches, len, rng)?;
        if max_deviation(populations, &plan) >= eps {
            exceedances += 1;
        }
    }
    let freq = exceedances as f64 / trials.max(1) as f64;
    let bound = deviation_bound(batches, populations.len() as u64, len, eps);
    // standard error of the frequency if the true rate sat exactly at the bound
    let p_ref = bound.min(1.0);
    let std_error = (p_ref * (1.0 - p_ref) / trials.max(1) as f64).sqrt();
    Ok(ConcentrationReport {
        trials,
        exceedances,
        empirical_freq: freq,
        std_error,
        bound,
        pass: freq <= bound + 3.0 * std_error,
        sizing_ok: n as u128 >= 3 * batches as u128 * len as u128,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn all_distinct(plan: &BatchPlan) -> bool {
        let mut v: Vec<u64> = plan.indices.iter().flatten().copied().collect();
        let len = v.len();
        v.sort_unstable();
        v.dedup();
        v.len() == len && v.iter().all(|&i| i < plan.n)
    }

    #[test]
    fn forced_partition() {
        let mut rng = StreamRng::new(1, 0);
        let plan = draw_batches(6, 3, 2, &mut rng).unwrap();
        assert_eq!(plan.indices.len(), 3);
        assert!(plan.indices.iter().all(|b| b.len() == 2));
        assert!(all_distinct(&plan));
        assert!(!plan.meets_sizing());
    }

    #[test]
    fn single_full_batch_is_permutation() {
        let mut rng = StreamRng::new(2, 0);
        let plan = draw_batches(4, 1, 4, &mut rng).unwrap();
        let mut v = plan.indices[0].clone();
        v.sort_unstable();
        assert_eq!(v, vec![0, 1, 2, 3]);
    }

    #[test]
    fn seeded_plan_is_reproducible() {
        let a = draw_batches(100, 5, 10, &mut StreamRng::new(7, 0)).unwrap();
        let b = draw_batches(100, 5, 10, &mut StreamRng::new(7, 0)).unwrap();
        assert_eq!(a, b);
        assert!(all_distinct(&a));
        assert!(draw_batches(100, 11, 10, &mut StreamRng::new(7, 0)).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(deviation_bound(2, 4, 1000, 0.0), 16.0);
        assert!((deviation_bound(2, 4, 1000, 0.2) - 16.0 * (-20.0f64).exp()).abs() < 1e-20);
        assert!((deviation_bound(2, 4, 100, 0.2) - 16.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!((16.0 * (-20.0f64).exp() - 3.30e-8).abs() < 0.01e-8);
    }

    #[test]
    fn constant_population_never_deviates() {
        let mut rng = StreamRng::new(3, 0);
        let pops = vec![vec![0.3; 300]];
        let r = verify_without_replacement(&pops, 3, 50, 1e-9, 200, &mut rng).unwrap();
        assert_eq!(r.exceedances, 0);
        assert!(r.pass);
    }

    #[test]
    fn run_batches_conserve_counts() {
        let mut rng = StreamRng::new(4, 0);
        let runs = [10_000_000_000u64, 3, 5_000_000];
        let b = draw_run_batches(&runs, 4, 1_000_000_000, &mut rng).unwrap();
        let mut used = [0u64; 3];
        for batch in &b {
            assert_eq!(batch.iter().map(|(_, c)| c).sum::<u64>(), 1_000_000_000);
            for &(i, c) in batch {
                used[i] += c;
            }
        }
        assert!(used.iter().zip(&runs).all(|(u, r)| u <= r));
    }
}
