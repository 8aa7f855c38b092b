//! Exact count-level draws used by the run-length representations.
//!
//! Sites inside a run are exchangeable, so splitting a run or filling it with
//! outcomes only ever needs category counts, never per-site values.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

/// Bernoulli(p) with p clamped to [0, 1].
pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p.clamp(0.0, 1.0)
}

/// Binomial(n, p) with p clamped to [0, 1].
pub fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if n == 0 || p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p checked").sample(rng)
}

/// Multinomial counts of `n` draws over weights that sum to (about) one.
///
/// Sequential conditional binomials; the last category takes the remainder.
pub fn multinomial<R: Rng + ?Sized>(n: u64, weights: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = Vec::with_capacity(weights.len());
    let mut left = n;
    let mut mass: f64 = weights.iter().sum();
    for (k, &w) in weights.iter().enumerate() {
        if k + 1 == weights.len() {
            out.push(left);
            break;
        }
        let x = if mass > 0.0 { binomial(left, w / mass, rng) } else { 0 };
        out.push(x);
        left -= x;
        mass -= w;
    }
    out
}

/// Hypergeometric: successes when drawing `draws` items without replacement from
/// `total` items of which `marked` are marked.
pub fn hypergeometric<R: Rng + ?Sized>(total: u64, marked: u64, draws: u64, rng: &mut R) -> u64 {
    debug_assert!(marked <= total && draws <= total);
    if draws == 0 || marked == 0 {
        return 0;
    }
    if draws == total {
        return marked;
    }
    if marked == total {
        return draws;
    }
    Hypergeometric::new(total, marked, draws).expect("arguments checked").sample(rng)
}

/// Counts per category among `draws` items taken without replacement from a pool
/// with the given category counts.
pub fn multivariate_hypergeometric<R: Rng + ?Sized>(counts: &[u64], draws: u64, rng: &mut R) -> Vec<u64> {
    let mut total: u64 = counts.iter().sum();
    assert!(draws <= total, "cannot draw {draws} items from a pool of {total}");
    let mut left = draws;
    let mut out = Vec::with_capacity(counts.len());
    for (k, &c) in counts.iter().enumerate() {
        if k + 1 == counts.len() {
            out.push(left);
            break;
        }
        let x = hypergeometric(total, c, left, rng);
        out.push(x);
        left -= x;
        total -= c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn multinomial_conserves_total() {
        let mut rng = StreamRng::new(1, 0);
        for n in [0u64, 1, 7, 1_000_000_007] {
            let c = multinomial(n, &[0.2, 0.0, 0.5, 0.3], &mut rng);
            assert_eq!(c.iter().sum::<u64>(), n);
            assert_eq!(c[1], 0);
        }
    }

    #[test]
    fn mv_hypergeometric_respects_pool() {
        let mut rng = StreamRng::new(2, 0);
        let pool = [5u64, 0, 3_000_000_000, 12];
        for draws in [0u64, 1, 17, 1_500_000_000, 3_000_000_017] {
            let c = multivariate_hypergeometric(&pool, draws, &mut rng);
            assert_eq!(c.iter().sum::<u64>(), draws);
            assert!(c.iter().zip(&pool).all(|(x, p)| x <= p));
        }
    }

    #[test]
    fn hypergeometric_mean_matches() {
        let mut rng = StreamRng::new(3, 0);
        let trials = 20_000;
        let s: u64 = (0..trials).map(|_| hypergeometric(50, 20, 10, &mut rng)).sum();
        let mean = s as f64 / trials as f64;
        // mean 4, sd of the average ≈ 1.4/√20000
        assert!((mean - 4.0).abs() < 0.05, "{mean}");
    }
}
