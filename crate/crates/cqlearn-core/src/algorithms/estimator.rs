//! The risk estimator `ρ*_t`: `q` copies of the classical-quantum state
//! `σ = Σ_k w_k |k⟩⟨k| ⊗ I/d` over cells `k`, post-selected on count events
//! "at least / at most `r` copies accept `Π^{(c)} = Σ_k |k⟩⟨k| ⊗ Π_k^{(c)}`".
//!
//! Two exact representations:
//! - dense: the `(S·d)^q`-dimensional matrix;
//! - commuting: for diagonal projectors the state stays diagonal and exchangeable, so
//!   it is a distribution over compositions of the `q` copies into accept-pattern classes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{AlgorithmConfig, AlgorithmError, CellInstance};
use crate::qcore::{ComplexMatrix, Projector, C64};
use crate::simstate::DIAGONAL_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorBackend {
    Dense,
    CommutingDp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// The estimate is too low: keep outcomes where at least `r` copies accept.
    Plus,
    /// The estimate is too high: keep outcomes where at most `r` copies accept.
    Minus,
}

/// An applied event with the probability it had on the state before it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostSelection {
    pub concept: usize,
    pub direction: Direction,
    pub r: u32,
    pub q: u32,
    pub probability: f64,
}

impl PostSelection {
    fn keeps(&self, accepts: u32) -> bool {
        match self.direction {
            Direction::Plus => accepts >= self.r,
            Direction::Minus => accepts <= self.r,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimatorState {
    q: u32,
    events: Vec<PostSelection>,
    repr: Repr,
}

#[derive(Clone, Debug)]
enum Repr {
    Dense(DenseEstimator),
    Dp(DpEstimator),
}

#[derive(Clone, Debug)]
struct DenseEstimator {
    /// Single-copy `Π^{(c)}` on `S·d` dimensions.
    single: Vec<ComplexMatrix>,
    one: usize,
    rho: ComplexMatrix,
}

#[derive(Clone, Debug)]
struct DpEstimator {
    /// `bits[g][c]`: class `g` accepts concept `c`.
    bits: Vec<Vec<bool>>,
    /// Copy counts per class with their probabilities.
    comps: Vec<(Vec<u32>, f64)>,
}

impl EstimatorState {
    /// Fresh `ρ*₀` over cells with weights `w_k` and per-cell projectors
    /// `concepts[c][k]`.
    pub fn new(
        weights: &[f64],
        concepts: &[Vec<Projector>],
        q: u32,
        backend: EstimatorBackend,
        cfg: &AlgorithmConfig,
    ) -> Result<Self, AlgorithmError> {
        if concepts.is_empty() {
            return Err(AlgorithmError::EmptyClass);
        }
        if q == 0 {
            return Err(AlgorithmError::Config("q must be at least 1"));
        }
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(AlgorithmError::Config("cell weights must be nonnegative with a positive sum"));
        }
        let dim = concepts[0].first().map_or(0, Projector::dim);
        for ps in concepts {
            if ps.len() != weights.len() {
                return Err(AlgorithmError::LengthMismatch { expected: weights.len() as u64, got: ps.len() as u64 });
            }
            if let Some(bad) = ps.iter().find(|p| p.dim() != dim) {
                return Err(AlgorithmError::Dimension { expected: dim, got: bad.dim() });
            }
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let repr = match backend {
            EstimatorBackend::Dense => {
                Repr::Dense(DenseEstimator::new(&weights, concepts, dim, q, cfg.dense_estimator_cap)?)
            }
            EstimatorBackend::CommutingDp => {
                Repr::Dp(DpEstimator::new(&weights, concepts, dim, q, cfg.max_compositions)?)
            }
        };
        Ok(Self { q, events: Vec::new(), repr })
    }

    /// Weights proportional to cell lengths: the empirical distribution of the classical register.
    pub fn from_instance(inst: &CellInstance, cfg: &AlgorithmConfig) -> Result<Self, AlgorithmError> {
        let weights: Vec<f64> = inst.cell_lens().iter().map(|&l| l as f64).collect();
        let concepts: Vec<Vec<Projector>> =
            (0..inst.concept_count()).map(|c| inst.cell_projectors(c).to_vec()).collect();
        Self::new(&weights, &concepts, cfg.q_copies, cfg.estimator, cfg)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn backend(&self) -> EstimatorBackend {
        match self.repr {
            Repr::Dense(_) => EstimatorBackend::Dense,
            Repr::Dp(_) => EstimatorBackend::CommutingDp,
        }
    }

    pub fn events(&self) -> &[PostSelection] {
        &self.events
    }

    pub fn concept_count(&self) -> usize {
        match &self.repr {
            Repr::Dense(d) => d.single.len(),
            Repr::Dp(d) => d.bits.first().map_or(0, Vec::len),
        }
    }

    /// Post-selects on the count event and returns its probability. On error the
    /// state is unchanged.
    pub fn post_select(
        &mut self,
        concept: usize,
        direction: Direction,
        r: i64,
    ) -> Result<PostSelection, AlgorithmError> {
        if concept >= self.concept_count() {
            return Err(AlgorithmError::UnknownConcept(concept));
        }
        if r < 0 || r > self.q as i64 {
            return Err(AlgorithmError::CountOutOfRange { r, q: self.q });
        }
        let mut ev = PostSelection { concept, direction, r: r as u32, q: self.q, probability: 0.0 };
        ev.probability = match &mut self.repr {
            Repr::Dense(d) => d.post_select(&ev)?,
            Repr::Dp(d) => d.post_select(&ev)?,
        };
        self.events.push(ev);
        Ok(ev)
    }

    /// Per-copy acceptance `μ_{c,t} = Tr[Π̄^{(c)} ρ*_t]/q` for every concept.
    pub fn predictions(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(d) => d.predictions(),
            Repr::Dp(d) => d.predictions(self.q),
        }
    }
}

/// Applies the event `F^±` with `r = ⌈(μ̂+ε/2)q⌉` (plus) or `r = ⌊(μ̂−ε/2)q⌋` (minus).
pub fn update_estimator(
    est: &mut EstimatorState,
    concept: usize,
    direction: Direction,
    mu_hat: f64,
    eps: f64,
) -> Result<PostSelection, AlgorithmError> {
    let q = est.q() as f64;
    let r = match direction {
        Direction::Plus => ((mu_hat + eps / 2.0) * q - 1e-9).ceil(),
        Direction::Minus => ((mu_hat - eps / 2.0) * q + 1e-9).floor(),
    };
    est.post_select(concept, direction, r as i64)
}

pub fn estimator_predictions(est: &EstimatorState) -> Vec<f64> {
    est.predictions()
}

impl DenseEstimator {
    fn new(
        weights: &[f64],
        concepts: &[Vec<Projector>],
        dim: usize,
        q: u32,
        cap: usize,
    ) -> Result<Self, AlgorithmError> {
        let one = weights.len() * dim;
        let total = (one as u128).checked_pow(q).unwrap_or(u128::MAX);
        if total > cap as u128 {
            return Err(AlgorithmError::Capacity {
                what: "dense estimator dimension",
                needed: total,
                cap: cap as u128,
            });
        }
        let block_diag = |blocks: &mut dyn Iterator<Item = (usize, &ComplexMatrix, f64)>| {
            let mut m = ComplexMatrix::zeros(one);
            for (k, b, s) in blocks {
                for i in 0..dim {
                    for j in 0..dim {
                        m[(k * dim + i, k * dim + j)] = b[(i, j)] * s;
                    }
                }
            }
            m
        };
        let single = concepts
            .iter()
            .map(|ps| block_diag(&mut ps.iter().enumerate().map(|(k, p)| (k, p.matrix(), 1.0))))
            .collect();
        let id = ComplexMatrix::identity(dim);
        let sigma = block_diag(&mut weights.iter().enumerate().map(|(k, w)| (k, &id, w / dim as f64)));
        let mut rho = sigma.clone();
        for _ in 1..q {
            rho = rho.kron(&sigma);
        }
        Ok(Self { single, one, rho })
    }

    /// `E(a)`: exactly `a` of the `q` copies accept, for `a = 0..=q`.
    fn count_projectors(&self, concept: usize, q: u32) -> Vec<ComplexMatrix> {
        let p = &self.single[concept];
        let pbar = &ComplexMatrix::identity(self.one) - p;
        let mut level = alloc::vec![ComplexMatrix::identity(1)];
        for j in 1..=q as usize {
            let mut next = Vec::with_capacity(j + 1);
            for a in 0..=j {
                let rej = (a < j).then(|| level[a].kron(&pbar));
                let acc = (a > 0).then(|| level[a - 1].kron(p));
                next.push(match (rej, acc) {
                    (Some(x), Some(y)) => &x + &y,
                    (Some(x), None) | (None, Some(x)) => x,
                    (None, None) => unreachable!(),
                });
            }
            level = next;
        }
        level
    }

    fn post_select(&mut self, ev: &PostSelection) -> Result<f64, AlgorithmError> {
        let dim = self.rho.dim();
        let mut f = ComplexMatrix::zeros(dim);
        for (a, e) in self.count_projectors(ev.concept, ev.q).iter().enumerate() {
            if ev.keeps(a as u32) {
                f = &f + e;
            }
        }
        let kept = f.matmul(&self.rho).matmul(&f);
        let p = kept.trace().re;
        if !(p > 1e-300) {
            return Err(AlgorithmError::ZeroProbability { concept: ev.concept });
        }
        self.rho = kept.scale_real(1.0 / p).hermitian_part();
        Ok(p.min(1.0))
    }

    /// First-copy marginal; the state is symmetric under permuting copies.
    fn marginal(&self) -> ComplexMatrix {
        let rest = self.rho.dim() / self.one;
        ComplexMatrix::from_fn(self.one, |i, j| {
            (0..rest).fold(C64::new(0.0, 0.0), |acc, k| acc + self.rho[(i * rest + k, j * rest + k)])
        })
    }

    fn predictions(&self) -> Vec<f64> {
        let m = self.marginal();
        self.single.iter().map(|p| m.trace_product_real(p)).collect()
    }
}

impl DpEstimator {
    fn new(weights: &[f64], concepts: &[Vec<Projector>], dim: usize, q: u32, cap: u64) -> Result<Self, AlgorithmError> {
        if concepts.iter().flatten().any(|p| !p.is_diagonal(DIAGONAL_TOL)) {
            return Err(AlgorithmError::NotDiagonal);
        }
        let masks: Vec<Vec<Vec<bool>>> =
            concepts.iter().map(|ps| ps.iter().map(Projector::diagonal_mask).collect()).collect();
        let mut classes: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for (k, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for b in 0..dim {
                let bits = masks.iter().map(|m| m[k][b]).collect();
                *classes.entry(bits).or_insert(0.0) += w / dim as f64;
            }
        }
        let (bits, class_w): (Vec<Vec<bool>>, Vec<f64>) = classes.into_iter().unzip();
        let g = bits.len();
        let needed = binomial(q as u64 + g as u64 - 1, g as u64 - 1);
        if needed > cap as u128 {
            return Err(AlgorithmError::Capacity { what: "copy compositions", needed, cap: cap as u128 });
        }
        let ln_fact: Vec<f64> = (0..=q)
            .scan(0.0, |acc, k| {
                if k > 0 {
                    *acc += (k as f64).ln();
                }
                Some(*acc)
            })
            .collect();
        let ln_w: Vec<f64> = class_w.iter().map(|w| w.ln()).collect();
        let mut comps = Vec::with_capacity(needed as usize);
        let mut cur = alloc::vec![0u32; g];
        compositions(q, 0, &mut cur, &mut |c| {
            let lp = ln_fact[q as usize]
                + c.iter().zip(&ln_w).map(|(&n, lw)| n as f64 * lw - ln_fact[n as usize]).sum::<f64>();
            comps.push((c.to_vec(), lp.exp()));
        });
        Ok(Self { bits, comps })
    }

    fn accepts(&self, comp: &[u32], concept: usize) -> u32 {
        comp.iter().zip(&self.bits).filter(|(_, b)| b[concept]).map(|(n, _)| n).sum()
    }

    fn post_select(&mut self, ev: &PostSelection) -> Result<f64, AlgorithmError> {
        let total: f64 = self.comps.iter().map(|c| c.1).sum();
        let kept: Vec<(Vec<u32>, f64)> =
            self.comps.iter().filter(|(c, _)| ev.keeps(self.accepts(c, ev.concept))).cloned().collect();
        let mass: f64 = kept.iter().map(|c| c.1).sum();
        if !(mass > 1e-300) {
            return Err(AlgorithmError::ZeroProbability { concept: ev.concept });
        }
        self.comps = kept.into_iter().map(|(c, p)| (c, p / mass)).collect();
        Ok((mass / total).min(1.0))
    }

    fn predictions(&self, q: u32) -> Vec<f64> {
        let total: f64 = self.comps.iter().map(|c| c.1).sum();
        let m = self.bits.first().map_or(0, Vec::len);
        (0..m)
            .map(|c| {
                self.comps.iter().map(|(comp, p)| p * self.accepts(comp, c) as f64).sum::<f64>() / (total * q as f64)
            })
            .collect()
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `f` on every way to split `left` copies over `cur[pos..]`.
fn compositions(left: u32, pos: usize, cur: &mut [u32], f: &mut impl FnMut(&[u32])) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        f(cur);
        return;
    }
    for take in 0..=left {
        cur[pos] = take;
        compositions(left - take, pos + 1, cur, f);
    }
    cur[pos] = 0;
}
