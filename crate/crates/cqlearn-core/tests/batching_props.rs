//! Batch plans: disjointness, coverage and run-count bookkeeping.

use std::collections::HashSet;

use cqlearn_core::batching::{draw_batches, draw_run_batches};
use cqlearn_core::StreamRng;
use proptest::collection::vec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn batches_are_disjoint_and_in_range(seed in any::<u64>(), n in 1u64..10_000, k in 1u64..20, l in 0u64..50) {
        let mut rng = StreamRng::new(seed, 0);
        match draw_batches(n, k, l, &mut rng) {
            Ok(plan) => {
                prop_assert_eq!(plan.indices.len() as u64, k);
                let mut seen = HashSet::new();
                for b in &plan.indices {
                    prop_assert_eq!(b.len() as u64, l);
                    for &i in b {
                        prop_assert!(i < n);
                        prop_assert!(seen.insert(i));
                    }
                }
            }
            Err(_) => prop_assert!(k * l > n),
        }
    }

    #[test]
    fn run_batches_respect_run_sizes(seed in any::<u64>(), runs in vec(0u64..200, 1..8), k in 1u64..6, l in 1u64..30) {
        let mut rng = StreamRng::new(seed, 1);
        let n: u64 = runs.iter().sum();
        match draw_run_batches(&runs, k, l, &mut rng) {
            Ok(out) => {
                let mut used = vec![0u64; runs.len()];
                for b in &out {
                    prop_assert_eq!(b.iter().map(|s| s.1).sum::<u64>(), l);
                    for &(r, c) in b {
                        used[r] += c;
                    }
                }
                prop_assert!(used.iter().zip(&runs).all(|(u, r)| u <= r));
            }
            Err(_) => prop_assert!(k * l > n),
        }
    }

    #[test]
    fn plans_replay_from_their_origin(seed in any::<u64>()) {
        let mut rng = StreamRng::new(seed, 2);
        let plan = draw_batches(1000, 4, 10, &mut rng).unwrap();
        let again = draw_batches(1000, 4, 10, &mut StreamRng::at(plan.origin)).unwrap();
        prop_assert_eq!(plan, again);
    }
}
