//! Poisson-binomial counts and their smoothing by exponential noise.
//!
//! `T = Σ Tᵢ` with independent `Tᵢ ~ Bernoulli(pᵢ)`, and `X ~ Exp(λ)` independent of `T`.
//! The smoothed event is `B = {T + X > θn}`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::E;
#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::sum::{compensated_sum, CompensatedSum};

/// Below this, conditioning on the reject branch is refused.
pub const MIN_CONDITIONING_MASS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PbError {
    #[error("probability p[{index}] = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("noise rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("distributions have different supports ({left} vs {right} points)")]
    SupportMismatch { left: usize, right: usize },
    #[error("q is zero at {index} where p is positive")]
    ZeroReference { index: usize },
    #[error("conditioning event has probability {mass:e}, below {MIN_CONDITIONING_MASS:e}")]
    DegenerateConditioning { mass: f64 },
    #[error("precondition violated: {clause}")]
    Precondition { clause: &'static str },
}

/// Exact law of a sum of independent, non-identical Bernoulli variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonBinomial {
    probs: Vec<f64>,
    pmf: Vec<f64>,
}

/// pmf by the O(n²) convolution recurrence `P_k ← P_k(1−p) + P_{k−1}p`.
pub fn pb_pmf(probs: &[f64]) -> Result<PoissonBinomial, PbError> {
    for (index, &value) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(PbError::ProbabilityOutOfRange { index, value });
        }
    }
    let mut pmf = vec![0.0; probs.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        let q = 1.0 - p;
        for k in (1..=i + 1).rev() {
            pmf[k] = pmf[k] * q + pmf[k - 1] * p;
        }
        pmf[0] *= q;
    }
    Ok(PoissonBinomial { probs: probs.to_vec(), pmf })
}

impl PoissonBinomial {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    pub fn variance(&self) -> f64 {
        compensated_sum(self.probs.iter().map(|p| p * (1.0 - p)))
    }

    pub fn stddev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Pr[T ≥ k]
    pub fn upper_tail(&self, k: usize) -> f64 {
        compensated_sum(self.pmf.iter().skip(k).copied())
    }
}

/// Exponential noise with rate λ (mean 1/λ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialNoise {
    lambda: f64,
}

impl ExponentialNoise {
    pub fn new(lambda: f64) -> Result<Self, PbError> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self { lambda })
        } else {
            Err(PbError::BadRate(lambda))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.lambda
    }

    /// Pr[X > s]
    pub fn survival(&self, s: f64) -> f64 {
        if s > 0.0 {
            (-self.lambda * s).exp()
        } else {
            1.0
        }
    }

    /// Pr[X ≤ s], accurate for small λs.
    pub fn cdf(&self, s: f64) -> f64 {
        if s > 0.0 {
            -(-self.lambda * s).exp_m1()
        } else {
            0.0
        }
    }
}

/// Pr[T + X > θn] = Σₜ Pr[T=t]·Pr[X > θn − t]
pub fn smoothed_tail(pb: &PoissonBinomial, noise: &ExponentialNoise, threshold: f64) -> f64 {
    let s = compensated_sum(pb.pmf.iter().enumerate().map(|(t, &w)| w * noise.survival(threshold - t as f64)));
    s.clamp(0.0, 1.0)
}

/// Law of `T` given the reject branch `T + X ≤ θn`.
pub fn conditional_pmf_reject(
    pb: &PoissonBinomial,
    noise: &ExponentialNoise,
    threshold: f64,
) -> Result<Vec<f64>, PbError> {
    let weights: Vec<f64> = pb.pmf.iter().enumerate().map(|(t, &w)| w * noise.cdf(threshold - t as f64)).collect();
    let mass = compensated_sum(weights.iter().copied());
    if !(mass >= MIN_CONDITIONING_MASS) {
        return Err(PbError::DegenerateConditioning { mass });
    }
    Ok(weights.into_iter().map(|w| w / mass).collect())
}

/// Σ √(pₓ qₓ)
pub fn bhattacharyya(p: &[f64], q: &[f64]) -> Result<f64, PbError> {
    if p.len() != q.len() {
        return Err(PbError::SupportMismatch { left: p.len(), right: q.len() });
    }
    Ok(compensated_sum(p.iter().zip(q).map(|(a, b)| (a * b).max(0.0).sqrt())))
}

/// Σ (pₓ − qₓ)²/qₓ
pub fn chi_squared(p: &[f64], q: &[f64]) -> Result<f64, PbError> {
    if p.len() != q.len() {
        return Err(PbError::SupportMismatch { left: p.len(), right: q.len() });
    }
    let mut acc = CompensatedSum::new();
    for (index, (&a, &b)) in p.iter().zip(q).enumerate() {
        if b > 0.0 {
            acc.add((a - b) * (a - b) / b);
        } else if a > 0.0 {
            return Err(PbError::ZeroReference { index });
        }
    }
    Ok(acc.value())
}

/// Multiplicative Chernoff tails `(e^{−ε²μ/3}, e^{−ε²μ/2})` for the upper and lower deviations.
pub fn chernoff_bounds(mean: f64, eps: f64) -> (f64, f64) {
    ((-eps * eps * mean / 3.0).exp(), (-eps * eps * mean / 2.0).exp())
}

/// exp(−nλ(θ − p̄ − eλ/2)), an upper bound on Pr[T + X > θn] for λ ∈ (0, 1).
pub fn smoothed_tail_exp_bound(probs: &[f64], lambda: f64, theta: f64) -> f64 {
    let n = probs.len() as f64;
    let pbar = if probs.is_empty() { 0.0 } else { compensated_sum(probs.iter().copied()) / n };
    (-n * lambda * (theta - pbar - E * lambda / 2.0)).exp()
}

/// Both sides of the χ² gentleness inequality for one instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GentlenessReport {
    pub p_b: f64,
    pub chi2: f64,
    /// (Pr[B]·stddev[T]·λ)²
    pub bound_rhs: f64,
    /// chi2 / bound_rhs, zero when both vanish.
    pub ratio: f64,
    pub c_cal: f64,
    pub ok: bool,
}

/// Checks χ²((T | B̄), T) ≤ C·(Pr[B]·stddev[T]·λ)².
///
/// Hypotheses: 1/λ ≥ max(1, stddev[T]) and Pr[B] < 1/4.
pub fn gentleness_check(
    pb: &PoissonBinomial,
    noise: &ExponentialNoise,
    threshold: f64,
    c_cal: f64,
) -> Result<GentlenessReport, PbError> {
    let sd = pb.stddev();
    if noise.mean() < 1.0f64.max(sd) {
        return Err(PbError::Precondition { clause: "noise mean 1/λ ≥ max(1, stddev[T])" });
    }
    let p_b = smoothed_tail(pb, noise, threshold);
    if !(p_b < 0.25) {
        return Err(PbError::Precondition { clause: "Pr[B] < 1/4" });
    }
    let cond = conditional_pmf_reject(pb, noise, threshold)?;
    let chi2 = chi_squared(&cond, pb.pmf())?;
    let bound_rhs = (p_b * sd * noise.lambda()).powi(2);
    let ratio = if bound_rhs > 0.0 {
        chi2 / bound_rhs
    } else if chi2 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(GentlenessReport { p_b, chi2, bound_rhs, ratio, c_cal, ok: chi2 <= c_cal * bound_rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(pb_pmf(&[0.5]).unwrap().pmf(), &[0.5, 0.5]);
        assert_eq!(pb_pmf(&[1.0, 0.0]).unwrap().pmf(), &[0.0, 1.0, 0.0]);
        // enumeration over the four bit patterns
        let oracle = [0.7 * 0.3, 0.3 * 0.3 + 0.7 * 0.7, 0.3 * 0.7];
        let got = pb_pmf(&[0.3, 0.7]).unwrap();
        for (a, b) in got.pmf().iter().zip(oracle) {
            assert!(close(*a, b, 1e-15));
        }
        assert!(close(oracle[1], 0.58, 1e-15));
        assert!(pb_pmf(&[1.2]).is_err());
    }

    #[test]
    fn tail_examples() {
        let pb = pb_pmf(&[0.3, 0.9, 0.2]).unwrap();
        let noise = ExponentialNoise::new(0.5).unwrap();
        assert_eq!(smoothed_tail(&pb, &noise, 0.0), 1.0);
        assert_eq!(smoothed_tail(&pb, &noise, -3.0), 1.0);
        let zero = pb_pmf(&[0.0]).unwrap();
        let unit = ExponentialNoise::new(1.0).unwrap();
        assert!(close(smoothed_tail(&zero, &unit, 1.0), (-1.0f64).exp(), 1e-15));
        assert!(close((-1.0f64).exp(), 0.3678794412, 1e-10));
    }

    #[test]
    fn conditional_examples() {
        let pb = pb_pmf(&[0.3, 0.6, 0.5]).unwrap();
        let noise = ExponentialNoise::new(0.4).unwrap();
        let far = conditional_pmf_reject(&pb, &noise, 1e6).unwrap();
        for (a, b) in far.iter().zip(pb.pmf()) {
            assert!(close(*a, *b, 1e-12));
        }
        let zero = pb_pmf(&[0.0]).unwrap();
        let unit = ExponentialNoise::new(1.0).unwrap();
        assert_eq!(conditional_pmf_reject(&zero, &unit, 1.0).unwrap(), vec![1.0, 0.0]);
        // renormalized elementwise product
        let th = 1.7;
        let got = conditional_pmf_reject(&pb, &noise, th).unwrap();
        let raw: Vec<f64> =
            pb.pmf().iter().enumerate().map(|(t, w)| w * (1.0 - noise.survival(th - t as f64))).collect();
        let z: f64 = raw.iter().sum();
        for (a, b) in got.iter().zip(&raw) {
            assert!(close(*a, b / z, 1e-14));
        }
        assert!(matches!(conditional_pmf_reject(&zero, &unit, -1.0), Err(PbError::DegenerateConditioning { .. })));
    }

    #[test]
    fn divergence_examples() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        assert!(close(bhattacharyya(&p, &p).unwrap(), 1.0, 1e-15));
        assert_eq!(chi_squared(&p, &p).unwrap(), 0.0);
        let bc = 0.5 * (0.5f64.sqrt() + 1.5f64.sqrt());
        assert!(close(bhattacharyya(&p, &q).unwrap(), bc, 1e-15));
        assert!(close(bc, 0.96593, 1e-5));
        assert!(close(chi_squared(&p, &q).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(matches!(chi_squared(&[1.0, 0.0], &[0.0, 1.0]), Err(PbError::ZeroReference { .. })));
        assert!(matches!(bhattacharyya(&[1.0], &[0.5, 0.5]), Err(PbError::SupportMismatch { .. })));
    }

    #[test]
    fn chernoff_examples() {
        assert_eq!(chernoff_bounds(10.0, 0.0), (1.0, 1.0));
        let (u, l) = chernoff_bounds(100.0, 0.3);
        assert!(close(u, (-3.0f64).exp(), 1e-15));
        assert!(close(l, (-4.5f64).exp(), 1e-15));
    }

    #[test]
    fn gentleness_examples() {
        let zero = pb_pmf(&[0.0; 10]).unwrap();
        let r = gentleness_check(&zero, &ExponentialNoise::new(0.5).unwrap(), 3.0, 10.0).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert!(r.ok);

        let pb = pb_pmf(&[0.5; 50]).unwrap();
        let lambda = 1.0 / (2.0 * pb.stddev());
        let noise = ExponentialNoise::new(lambda).unwrap();
        let r = gentleness_check(&pb, &noise, 0.8 * 50.0, 10.0).unwrap();
        assert!(r.ok, "{r:?}");

        let tight = ExponentialNoise::new(0.9).unwrap();
        assert!(matches!(
            gentleness_check(&pb, &tight, 40.0, 10.0),
            Err(PbError::Precondition { clause }) if clause.contains("noise mean")
        ));
        assert!(matches!(
            gentleness_check(&pb, &noise, 0.0, 10.0),
            Err(PbError::Precondition { clause }) if clause.contains("1/4")
        ));
    }

    #[test]
    fn chi_squared_equals_variance_form() {
        // χ²((T|B̄),T) = Var[f(T)] / Pr[B̄]² with f(t) = Pr[B | T=t]
        let pb = pb_pmf(&[0.1, 0.4, 0.35, 0.8, 0.55, 0.2]).unwrap();
        let noise = ExponentialNoise::new(0.3).unwrap();
        let th = 4.2;
        let f: Vec<f64> = (0..=6).map(|t| noise.survival(th - t as f64)).collect();
        let ef: f64 = pb.pmf().iter().zip(&f).map(|(w, v)| w * v).sum();
        let ef2: f64 = pb.pmf().iter().zip(&f).map(|(w, v)| w * v * v).sum();
        let var = ef2 - ef * ef;
        let oracle = var / (1.0 - ef).powi(2);
        let cond = conditional_pmf_reject(&pb, &noise, th).unwrap();
        assert!(close(chi_squared(&cond, pb.pmf()).unwrap(), oracle, 1e-13));
    }
}
