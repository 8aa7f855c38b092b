//! Learning classical-quantum processes from single copies of product states.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom up:
//!
//! - [`qcore`]: complex matrices, states, projectors, distances, matrix functions.
//! - [`pbnoise`]: Poisson-binomial counts smoothed by exponential noise.
//! - [`simstate`]: product states and sequential gentle measurements (dense and commuting backends).
//! - [`batching`]: disjoint batches drawn without replacement.
//! - [`concepts`]: concept classes, classical-quantum sources, example families.
//! - [`nets`]: empirical ε-nets and covering-number calculators.
//! - [`algorithms`]: threshold search, ERM, risk estimation, hypothesis selection, pure-state learner.
//! - [`learner`]: the end-to-end pipeline with oracle validation.
#![no_std]
// `!(x > 0.0)` is the idiom for rejecting NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algorithms;
pub mod batching;
pub mod concepts;
pub mod draws;
pub mod learner;
pub mod nets;
pub mod pbnoise;
pub mod qcore;
pub mod rng;
pub mod simstate;
pub mod sum;

pub use rng::{RngPosition, StreamRng};
