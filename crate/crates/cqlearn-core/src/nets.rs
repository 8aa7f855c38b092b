//! Covering nets of concept classes on data, parameter grids for smooth families,
//! and closed-form covering-number bounds.
//!
//! Distances use the data-dependent seminorm `(1/n)Σᵢ‖c₁(xᵢ) − c₂(xᵢ)‖_q`, with
//! `q = 1` for state-valued and `q = ∞` for projector-valued concepts.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{E, LN_10};

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::concepts::{ConceptClass, ConceptError, ConceptFamily, ConceptKind, ConceptRef, Label, ParamRecord};
use crate::qcore::{operator_norm, trace_norm, ComplexMatrix, LinalgError};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("nets need at least one label")]
    NoLabels,
    #[error("label weights must match the labels, be nonnegative and have a positive sum")]
    BadWeights,
    #[error("an infinite class needs a positive sample budget")]
    ZeroBudget,
    #[error("concepts differ in kind or dimension")]
    Incompatible,
    #[error("family has no parameter box")]
    NotParametric,
    #[error("grid spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("parameter grid would have {points} points, above the cap of {cap}")]
    TooManyPoints { points: f64, cap: usize },
}

/// Schatten index of the per-label norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetNorm {
    /// Trace norm, for state-valued concepts.
    One,
    /// Operator norm, for projector-valued concepts.
    Inf,
}

impl NetNorm {
    pub fn for_kind(kind: ConceptKind) -> Self {
        match kind {
            ConceptKind::State => NetNorm::One,
            ConceptKind::Projector => NetNorm::Inf,
        }
    }

    fn norm(self, m: &ComplexMatrix) -> Result<f64, LinalgError> {
        match self {
            NetNorm::One => trace_norm(m),
            NetNorm::Inf => operator_norm(m),
        }
    }
}

fn outputs(c: &ConceptRef, labels: &[Label]) -> Result<Vec<ComplexMatrix>, NetError> {
    labels.iter().map(|x| Ok(c.eval(x)?.matrix().clone())).collect()
}

/// Weighted mean of per-label distances; `weights` sum to one.
fn mean_distance(a: &[ComplexMatrix], b: &[ComplexMatrix], weights: &[f64], q: NetNorm) -> Result<f64, NetError> {
    let mut total = 0.0;
    for ((x, y), w) in a.iter().zip(b).zip(weights) {
        total += w * q.norm(&(x - y))?;
    }
    Ok(total)
}

fn uniform_weights(n: usize) -> Vec<f64> {
    alloc::vec![1.0 / n as f64; n]
}

fn normalized_weights(labels: &[Label], weights: &[f64]) -> Result<Vec<f64>, NetError> {
    if labels.is_empty() {
        return Err(NetError::NoLabels);
    }
    let total: f64 = weights.iter().sum();
    if weights.len() != labels.len() || weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
        return Err(NetError::BadWeights);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// `(1/n)Σᵢ‖c₁(xᵢ) − c₂(xᵢ)‖_q`.
pub fn pseudometric(c1: &ConceptRef, c2: &ConceptRef, labels: &[Label], q: NetNorm) -> Result<f64, NetError> {
    if labels.is_empty() {
        return Err(NetError::NoLabels);
    }
    if c1.kind() != c2.kind() || c1.dim() != c2.dim() {
        return Err(NetError::Incompatible);
    }
    mean_distance(&outputs(c1, labels)?, &outputs(c2, labels)?, &uniform_weights(labels.len()), q)
}

/// A finite internal net of an audited pool of concepts.
#[derive(Clone, Debug)]
pub struct EmpiricalNet {
    pool: Vec<ConceptRef>,
    /// Pool indices of the net members, in selection order.
    members: Vec<usize>,
    /// For each pool concept, the position in `members` of its nearest member.
    assignment: Vec<usize>,
    distances: Vec<f64>,
    eps: f64,
    q: NetNorm,
    labels: Vec<Label>,
    /// Normalized label multiplicities.
    weights: Vec<f64>,
    /// The pool was sampled from an infinite family, so coverage is certified only on it.
    audited_on_sample: bool,
}

impl EmpiricalNet {
    pub fn members(&self) -> Vec<ConceptRef> {
        self.members.iter().map(|&i| self.pool[i].clone()).collect()
    }

    pub fn member_indices(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pool(&self) -> &[ConceptRef] {
        &self.pool
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn norm(&self) -> NetNorm {
        self.q
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn audited_on_sample(&self) -> bool {
        self.audited_on_sample
    }

    /// Largest distance from a pool concept to its assigned member.
    pub fn covering_radius(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }

    /// Brute-force check that every pool concept is within `eps` of some member.
    pub fn audit(&self) -> Result<bool, NetError> {
        let members: Vec<Vec<ComplexMatrix>> =
            self.members.iter().map(|&i| outputs(&self.pool[i], &self.labels)).collect::<Result<_, _>>()?;
        for c in &self.pool {
            let out = outputs(c, &self.labels)?;
            let mut best = f64::INFINITY;
            for m in &members {
                best = best.min(mean_distance(&out, m, &self.weights, self.q)?);
            }
            if best > self.eps {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn record(&self) -> NetRecord {
        NetRecord {
            members: self.members.iter().map(|&i| self.pool[i].params()).collect(),
            labels: self.labels.clone(),
            weights: self.weights.clone(),
            eps: self.eps,
            q: self.q,
            audited_on_sample: self.audited_on_sample,
        }
    }
}

/// Serializable form of a net.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetRecord {
    pub members: Vec<ParamRecord>,
    pub labels: Vec<Label>,
    pub weights: Vec<f64>,
    pub eps: f64,
    pub q: NetNorm,
    pub audited_on_sample: bool,
}

/// Farthest-point traversal of `pool`, stopped once every concept is within `eps`.
///
/// Starts from pool index 0 and repeatedly adds the concept farthest from the current
/// members (lowest index on ties). The traversal order does not depend on `eps`, so a
/// smaller `eps` yields a superset of members. Members are pairwise more than `eps` apart.
pub fn farthest_point_net(
    pool: Vec<ConceptRef>,
    labels: &[Label],
    eps: f64,
    q: NetNorm,
) -> Result<EmpiricalNet, NetError> {
    if labels.is_empty() {
        return Err(NetError::NoLabels);
    }
    weighted_farthest_point_net(pool, labels, &uniform_weights(labels.len()), eps, q)
}

/// [`farthest_point_net`] for distinct labels with multiplicities: the pseudometric
/// averages over labels with the given (unnormalized) weights.
pub fn weighted_farthest_point_net(
    pool: Vec<ConceptRef>,
    labels: &[Label],
    weights: &[f64],
    eps: f64,
    q: NetNorm,
) -> Result<EmpiricalNet, NetError> {
    let weights = normalized_weights(labels, weights)?;
    let first = pool.first().ok_or(ConceptError::EmptyClass)?;
    if pool.iter().any(|c| c.kind() != first.kind() || c.dim() != first.dim()) {
        return Err(NetError::Incompatible);
    }
    let outs: Vec<Vec<ComplexMatrix>> = pool.iter().map(|c| outputs(c, labels)).collect::<Result<_, _>>()?;
    let mut members = alloc::vec![0usize];
    let mut assignment = alloc::vec![0usize; pool.len()];
    let mut distances = Vec::with_capacity(pool.len());
    for o in &outs {
        distances.push(mean_distance(o, &outs[0], &weights, q)?);
    }
    loop {
        let (far, &d) =
            distances
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if d <= eps {
            break;
        }
        let slot = members.len();
        members.push(far);
        for (i, o) in outs.iter().enumerate() {
            let di = mean_distance(o, &outs[far], &weights, q)?;
            // strict: ties stay with the earlier member
            if di < distances[i] {
                distances[i] = di;
                assignment[i] = slot;
            }
        }
    }
    Ok(EmpiricalNet {
        pool,
        members,
        assignment,
        distances,
        eps,
        q,
        labels: labels.to_vec(),
        weights,
        audited_on_sample: false,
    })
}

/// Internal `eps`-net of a class on the labels.
///
/// Finite classes are covered exactly. Infinite classes are represented by
/// `sample_budget` sampled members, and the net is marked as audited on that sample.
pub fn build_empirical_net(
    cls: &ConceptClass,
    labels: &[Label],
    eps: f64,
    q: NetNorm,
    sample_budget: usize,
    rng: &mut StreamRng,
) -> Result<EmpiricalNet, NetError> {
    build_weighted_net(cls, labels, &uniform_weights(labels.len()), eps, q, sample_budget, rng)
}

/// [`build_empirical_net`] for distinct labels with multiplicities.
pub fn build_weighted_net(
    cls: &ConceptClass,
    labels: &[Label],
    weights: &[f64],
    eps: f64,
    q: NetNorm,
    sample_budget: usize,
    rng: &mut StreamRng,
) -> Result<EmpiricalNet, NetError> {
    match cls.members() {
        Some(m) => weighted_farthest_point_net(m.to_vec(), labels, weights, eps, q),
        None => {
            if sample_budget == 0 {
                return Err(NetError::ZeroBudget);
            }
            let pool = (0..sample_budget).map(|_| cls.sample(rng)).collect::<Result<Vec<_>, _>>()?;
            let mut net = weighted_farthest_point_net(pool, labels, weights, eps, q)?;
            net.audited_on_sample = true;
            Ok(net)
        }
    }
}

/// `lo, lo + s, …` up to and including `hi`.
pub fn grid_axis(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    if hi <= lo {
        return alloc::vec![lo];
    }
    let steps = ((hi - lo) / spacing - 1e-9).ceil().max(0.0) as usize;
    (0..=steps).map(|k| (lo + k as f64 * spacing).min(hi)).collect()
}

/// A grid over a family's parameter box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterNet {
    pub points: Vec<Vec<f64>>,
    pub axes: Vec<Vec<f64>>,
    pub spacing: f64,
    /// Every admissible parameter lies within this much of a grid point, per coordinate.
    pub param_radius: f64,
    /// Concept-space covering radius implied by the family's perturbation bound.
    pub induced_eps: Option<f64>,
}

/// Grid points in row-major order, then the per-axis coordinates they were built from.
pub type BoxGrid = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Product grid over a box, refusing grids above `max_points`.
pub fn box_grid(bx: &[(f64, f64)], spacing: f64, max_points: usize) -> Result<BoxGrid, NetError> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(NetError::BadSpacing(spacing));
    }
    let axes: Vec<Vec<f64>> = bx.iter().map(|&(lo, hi)| grid_axis(lo, hi, spacing)).collect();
    let points = axes.iter().map(|a| a.len() as f64).product::<f64>();
    if points > max_points as f64 {
        return Err(NetError::TooManyPoints { points, cap: max_points });
    }
    let mut grid = alloc::vec![Vec::new()];
    for axis in &axes {
        grid = grid
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok((grid, axes))
}

pub fn parameter_net(family: &dyn ConceptFamily, spacing: f64, max_points: usize) -> Result<ParameterNet, NetError> {
    let bx = family.parameter_box().ok_or(NetError::NotParametric)?;
    let (points, axes) = box_grid(&bx, spacing, max_points)?;
    let param_radius = spacing / 2.0;
    Ok(ParameterNet { points, axes, spacing, param_radius, induced_eps: family.perturbation_bound(param_radius) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterAudit {
    pub pairs: usize,
    pub max_distance: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Checks every pair of grid neighbours against the perturbation bound at one spacing.
pub fn audit_parameter_net(
    family: &dyn ConceptFamily,
    net: &ParameterNet,
    labels: &[Label],
    q: NetNorm,
) -> Result<ParameterAudit, NetError> {
    let bound = family.perturbation_bound(net.spacing).ok_or(NetError::NotParametric)?;
    let concepts: Vec<ConceptRef> = net.points.iter().map(|p| family.at(p)).collect::<Result<_, _>>()?;
    let outs: Vec<Vec<ComplexMatrix>> = concepts.iter().map(|c| outputs(c, labels)).collect::<Result<_, _>>()?;
    let weights = uniform_weights(labels.len());
    // row-major strides matching the construction order in `box_grid`
    let lens: Vec<usize> = net.axes.iter().map(Vec::len).collect();
    let mut strides = alloc::vec![1usize; lens.len()];
    for k in (0..lens.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * lens[k + 1];
    }
    let (mut pairs, mut max_distance) = (0, 0.0f64);
    for i in 0..outs.len() {
        for (k, &stride) in strides.iter().enumerate() {
            if (i / stride) % lens[k] + 1 < lens[k] {
                max_distance = max_distance.max(mean_distance(&outs[i], &outs[i + stride], &weights, q)?);
                pairs += 1;
            }
        }
    }
    Ok(ParameterAudit { pairs, max_distance, bound, pass: max_distance <= bound + 1e-12 })
}

/// A covering-number bound, stored as `log₁₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringBoundReport {
    pub family: String,
    pub parameters: Vec<(String, f64)>,
    pub log10_bound: f64,
}

fn report(family: &str, parameters: &[(&str, f64)], log10_bound: f64) -> CoveringBoundReport {
    CoveringBoundReport {
        family: String::from(family),
        parameters: parameters.iter().map(|&(k, v)| (String::from(k), v)).collect(),
        log10_bound,
    }
}

/// `(1 + 2R/ε)^K` points suffice for an `ε`-net of a radius-`R` ball in `K` real dimensions.
pub fn bound_ball(radius: f64, eps: f64, dims: u64) -> CoveringBoundReport {
    let log10 = dims as f64 * (1.0 + 2.0 * radius / eps).log10();
    report("ball", &[("radius", radius), ("eps", eps), ("dims", dims as f64)], log10)
}

/// `[m·(6ℓ/ε)^32]^ℓ` for local quantum circuits of `ℓ` two-qubit gates on `m` qubits.
pub fn bound_lqc(qubits: u64, steps: u64, eps: f64) -> CoveringBoundReport {
    let l = steps as f64;
    let log10 = l * ((qubits as f64).log10() + 32.0 * (6.0 * l / eps).log10());
    report("lqc", &[("qubits", qubits as f64), ("steps", l), ("eps", eps)], log10)
}

/// `(6mℓ/ε)^{32mℓ}` for brickwork circuits.
pub fn bound_brickwork(qubits: u64, layers: u64, eps: f64) -> CoveringBoundReport {
    let ml = qubits as f64 * layers as f64;
    let log10 = 32.0 * ml * (6.0 * ml / eps).log10();
    report("brickwork", &[("qubits", qubits as f64), ("layers", layers as f64), ("eps", eps)], log10)
}

/// `(6/ε)^{2^{2m+2}}` for arbitrary unitaries on `m` qubits.
pub fn bound_full_unitary(qubits: u64, eps: f64) -> CoveringBoundReport {
    let log10 = 2f64.powi(2 * qubits as i32 + 2) * (6.0 / eps).log10();
    report("full_unitary", &[("qubits", qubits as f64), ("eps", eps)], log10)
}

/// `2(4nB²/ε²)^{D·log₂(4eBn/(Dε))}` for real functions with range `B` and fat-shattering dimension `D`.
pub fn bound_fatshatter(n: u64, range: f64, eps: f64, dim: f64) -> CoveringBoundReport {
    let n_f = n as f64;
    let exponent = dim * (4.0 * E * range * n_f / (dim * eps)).log2();
    let log10 = 2f64.log10() + exponent * (4.0 * n_f * range * range / (eps * eps)).log10();
    report("fat_shattering", &[("n", n_f), ("range", range), ("eps", eps), ("dim", dim)], log10)
}

/// `4·Γ·e^{−nε²/(32c²)}` with `ln Γ = log_cover`; values above 1 are vacuous.
pub fn uniform_convergence_bound(n: u64, eps: f64, log_cover: f64, c: f64) -> f64 {
    4.0 * (log_cover - n as f64 * eps * eps / (32.0 * c * c)).exp()
}

/// Natural log of a covering number reported in base 10.
pub fn ln_cover(report: &CoveringBoundReport) -> f64 {
    report.log10_bound * LN_10
}
