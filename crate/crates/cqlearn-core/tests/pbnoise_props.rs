//! Poisson-binomial and exponential-noise properties.

use cqlearn_core::pbnoise::{
    bhattacharyya, chi_squared, conditional_pmf_reject, pb_pmf, smoothed_tail, smoothed_tail_exp_bound,
    ExponentialNoise,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn probs() -> impl Strategy<Value = Vec<f64>> {
    vec(0.0f64..=1.0, 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pmf_is_normalized_with_the_right_mean(p in probs()) {
        let pb = pb_pmf(&p).unwrap();
        prop_assert!((pb.pmf().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let mean: f64 = pb.pmf().iter().enumerate().map(|(t, w)| t as f64 * w).sum();
        prop_assert!((mean - p.iter().sum::<f64>()).abs() <= 1e-10);
        prop_assert!(pb.pmf().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn tail_is_monotone(p in probs(), lambda in 0.01f64..0.99, theta in -2.0f64..20.0, step in 0.0f64..3.0, i in any::<prop::sample::Index>(), bump in 0.0f64..1.0) {
        let noise = ExponentialNoise::new(lambda).unwrap();
        let pb = pb_pmf(&p).unwrap();
        let base = smoothed_tail(&pb, &noise, theta);
        prop_assert!(smoothed_tail(&pb, &noise, theta + step) <= base + 1e-12);
        let mut q = p.clone();
        let k = i.index(q.len());
        q[k] = (q[k] + bump).min(1.0);
        prop_assert!(smoothed_tail(&pb_pmf(&q).unwrap(), &noise, theta) >= base - 1e-12);
    }

    #[test]
    fn rejecting_lowers_the_mean(p in probs(), lambda in 0.05f64..0.99, frac in 0.0f64..1.5) {
        let noise = ExponentialNoise::new(lambda).unwrap();
        let pb = pb_pmf(&p).unwrap();
        let theta = frac * p.len() as f64;
        if let Ok(cond) = conditional_pmf_reject(&pb, &noise, theta) {
            let mean: f64 = cond.iter().enumerate().map(|(t, w)| t as f64 * w).sum();
            prop_assert!(mean <= pb.mean() + 1e-10);
        }
    }

    #[test]
    fn exponential_bound_holds(p in probs(), lambda in 0.01f64..0.99, frac in 0.0f64..1.5) {
        let noise = ExponentialNoise::new(lambda).unwrap();
        let n = p.len() as f64;
        let tail = smoothed_tail(&pb_pmf(&p).unwrap(), &noise, frac * n);
        prop_assert!(tail <= smoothed_tail_exp_bound(&p, lambda, frac) * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn one_minus_bc_below_chi_squared(raw in vec((0.0f64..1.0, 0.01f64..1.0), 1..12)) {
        let (a, b): (Vec<f64>, Vec<f64>) = raw.into_iter().unzip();
        let sa: f64 = a.iter().sum();
        prop_assume!(sa > 0.0);
        let sb: f64 = b.iter().sum();
        let p: Vec<f64> = a.iter().map(|x| x / sa).collect();
        let q: Vec<f64> = b.iter().map(|x| x / sb).collect();
        prop_assert!(1.0 - bhattacharyya(&p, &q).unwrap() <= chi_squared(&p, &q).unwrap() + 1e-12);
    }
}
