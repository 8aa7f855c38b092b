//! Concrete concepts and the families that generate them.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_params, sample_box, Concept, ConceptClass, ConceptError, ConceptFamily, ConceptKind, ConceptOutput,
    ConceptRef, Label, ParamRecord, RealFunction, RealFunctionFamily,
};
use crate::qcore::random::haar_unitary;
use crate::qcore::{
    eigh, low_energy_projector, matrix_exp_hermitian, ComplexMatrix, DensityMatrix, ExpMode, HermitianMatrix, Projector,
};
use crate::rng::StreamRng;

/// Largest qubit count the circuit families will build dense unitaries for.
pub const DEFAULT_MAX_QUBITS: usize = 10;

/// `|x⟩⟨x|` for a bitstring label, as a projector or a state.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEncoding {
    qubits: usize,
    kind: ConceptKind,
}

impl BasisEncoding {
    pub fn new(qubits: usize, kind: ConceptKind) -> Self {
        Self { qubits, kind }
    }
}

impl Concept for BasisEncoding {
    fn kind(&self) -> ConceptKind {
        self.kind
    }

    fn dim(&self) -> usize {
        1 << self.qubits
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        let k = match x {
            Label::Bits(b) if b.len() == self.qubits => x.bit_index().unwrap_or(0),
            _ => return Err(ConceptError::UnknownLabel(x.clone())),
        };
        Ok(match self.kind {
            ConceptKind::Projector => ConceptOutput::Projector(Projector::basis_subset(self.dim(), &[k])),
            ConceptKind::State => ConceptOutput::State(DensityMatrix::basis(self.dim(), k)),
        })
    }

    fn params(&self) -> ParamRecord {
        ParamRecord::new("basis_encoding", alloc::vec![self.qubits as f64])
    }
}

/// The same output for every label.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantConcept(pub ConceptOutput);

impl Concept for ConstantConcept {
    fn kind(&self) -> ConceptKind {
        self.0.kind()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, _x: &Label) -> Result<ConceptOutput, ConceptError> {
        Ok(self.0.clone())
    }

    fn params(&self) -> ParamRecord {
        ParamRecord::new("constant", Vec::new())
    }
}

/// An explicit finite table of label → output.
#[derive(Clone, Debug, PartialEq)]
pub struct TableConcept {
    entries: Vec<(Label, ConceptOutput)>,
    id: f64,
}

impl TableConcept {
    /// `id` distinguishes members of a finite class in reports.
    pub fn new(entries: Vec<(Label, ConceptOutput)>, id: f64) -> Result<Self, ConceptError> {
        let first = entries.first().ok_or(ConceptError::EmptyClass)?;
        let (kind, dim) = (first.1.kind(), first.1.dim());
        for (_, out) in &entries {
            if out.kind() != kind {
                return Err(ConceptError::KindMismatch { expected: kind, got: out.kind() });
            }
            if out.dim() != dim {
                return Err(ConceptError::Dimension { expected: dim, got: out.dim() });
            }
        }
        Ok(Self { entries, id })
    }
}

impl Concept for TableConcept {
    fn kind(&self) -> ConceptKind {
        self.entries[0].1.kind()
    }

    fn dim(&self) -> usize {
        self.entries[0].1.dim()
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        self.entries
            .iter()
            .find(|(l, _)| l == x)
            .map(|(_, o)| o.clone())
            .ok_or_else(|| ConceptError::UnknownLabel(x.clone()))
    }

    fn params(&self) -> ParamRecord {
        ParamRecord::new("table", alloc::vec![self.id])
    }
}

/// The state `Π(x)/rank Π(x)` of a projector concept; the maximally mixed state where `Π(x) = 0`.
#[derive(Clone, Debug)]
pub struct NormalizedProjector(pub ConceptRef);

impl Concept for NormalizedProjector {
    fn kind(&self) -> ConceptKind {
        ConceptKind::State
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        let p = self.0.eval_projector(x)?;
        let rank = p.rank();
        let state = if rank == 0 {
            DensityMatrix::maximally_mixed(p.dim())
        } else {
            DensityMatrix::new(p.matrix().scale_real(1.0 / rank as f64))?
        };
        Ok(ConceptOutput::State(state))
    }

    fn params(&self) -> ParamRecord {
        let mut r = self.0.params();
        r.family = format!("normalized_{}", r.family);
        r
    }
}

/// One gate acting on qubits `first .. first + width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircuitOp {
    Fixed {
        first: usize,
        gate: ComplexMatrix,
    },
    /// `exp(i·g(x)·H)`
    Data {
        first: usize,
        ham: HermitianMatrix,
        g: RealFunction,
    },
}

impl CircuitOp {
    fn first(&self) -> usize {
        match self {
            CircuitOp::Fixed { first, .. } | CircuitOp::Data { first, .. } => *first,
        }
    }

    fn local_dim(&self) -> usize {
        match self {
            CircuitOp::Fixed { gate, .. } => gate.dim(),
            CircuitOp::Data { ham, .. } => ham.dim(),
        }
    }

    fn local(&self, x: &Label) -> Result<ComplexMatrix, ConceptError> {
        Ok(match self {
            CircuitOp::Fixed { gate, .. } => gate.clone(),
            CircuitOp::Data { ham, g, .. } => matrix_exp_hermitian(ham, ExpMode::Unitary(g.eval(x)))?,
        })
    }
}

/// A gate sequence on `qubits` qubits; qubit 0 is the most significant tensor factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    qubits: usize,
    ops: Vec<CircuitOp>,
}

impl Circuit {
    pub fn new(qubits: usize, ops: Vec<CircuitOp>) -> Result<Self, ConceptError> {
        for op in &ops {
            let d = op.local_dim();
            if !d.is_power_of_two() || op.first() + d.trailing_zeros() as usize > qubits {
                return Err(ConceptError::BadSpec("gate does not fit the register"));
            }
        }
        Ok(Self { qubits, ops })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    /// `U(x) = G_L ⋯ G_1`: the first op acts first.
    pub fn unitary(&self, x: &Label) -> Result<ComplexMatrix, ConceptError> {
        let dim = 1usize << self.qubits;
        let mut u = ComplexMatrix::identity(dim);
        for op in &self.ops {
            let local = op.local(x)?;
            let width = local.dim().trailing_zeros() as usize;
            let left = ComplexMatrix::identity(1 << op.first());
            let right = ComplexMatrix::identity(1 << (self.qubits - op.first() - width));
            u = &left.kron(&local).kron(&right) * &u;
        }
        Ok(u)
    }
}

/// Random circuit architectures with Haar-random gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircuitArch {
    /// One two-qubit gate per step on a uniformly random neighbouring pair.
    Local { qubits: usize, steps: usize },
    /// Every neighbouring pair gets a two-qubit gate at every layer.
    Brickwork { qubits: usize, layers: usize },
    /// A single Haar unitary on the whole register.
    FullUnitary { qubits: usize },
}

impl CircuitArch {
    pub fn qubits(&self) -> usize {
        match *self {
            CircuitArch::Local { qubits, .. }
            | CircuitArch::Brickwork { qubits, .. }
            | CircuitArch::FullUnitary { qubits } => qubits,
        }
    }

    pub fn gate_count(&self) -> usize {
        match *self {
            CircuitArch::Local { steps, .. } => steps,
            CircuitArch::Brickwork { qubits, layers } => qubits.saturating_sub(1) * layers,
            CircuitArch::FullUnitary { .. } => 1,
        }
    }

    fn validate(&self, max_qubits: usize) -> Result<(), ConceptError> {
        let m = self.qubits();
        if m == 0 {
            return Err(ConceptError::BadSpec("circuits need at least one qubit"));
        }
        if m > max_qubits {
            return Err(ConceptError::CapExceeded { qubits: m, cap: max_qubits });
        }
        if m < 2 && !matches!(self, CircuitArch::FullUnitary { .. }) {
            return Err(ConceptError::BadSpec("two-qubit gate architectures need at least two qubits"));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Circuit {
        let ops = match *self {
            CircuitArch::Local { qubits, steps } => (0..steps)
                .map(|_| CircuitOp::Fixed { first: rng.random_range(0..qubits - 1), gate: haar_unitary(4, rng) })
                .collect(),
            CircuitArch::Brickwork { qubits, layers } => (0..layers)
                .flat_map(|_| 0..qubits - 1)
                .map(|first| CircuitOp::Fixed { first, gate: haar_unitary(4, rng) })
                .collect(),
            CircuitArch::FullUnitary { qubits } => {
                alloc::vec![CircuitOp::Fixed { first: 0, gate: haar_unitary(1 << qubits, rng) }]
            }
        };
        Circuit { qubits: self.qubits(), ops }
    }
}

/// `x ↦ U(x) prep(x) U(x)†`.
#[derive(Clone, Debug)]
pub struct CircuitConcept {
    prep: ConceptRef,
    circuit: Circuit,
    id: f64,
}

impl CircuitConcept {
    pub fn new(prep: ConceptRef, circuit: Circuit, id: f64) -> Result<Self, ConceptError> {
        let dim = 1usize << circuit.qubits();
        if prep.dim() != dim {
            return Err(ConceptError::Dimension { expected: dim, got: prep.dim() });
        }
        Ok(Self { prep, circuit, id })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }
}

impl Concept for CircuitConcept {
    fn kind(&self) -> ConceptKind {
        self.prep.kind()
    }

    fn dim(&self) -> usize {
        self.prep.dim()
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        Ok(self.prep.eval(x)?.conjugate(&self.circuit.unitary(x)?))
    }

    fn params(&self) -> ParamRecord {
        let mut values = alloc::vec![self.id];
        for op in self.circuit.ops() {
            if let CircuitOp::Data { g, .. } = op {
                values.extend_from_slice(g.coeffs());
            }
        }
        ParamRecord::new("circuit", values)
    }
}

/// Data-dependent gates `exp(i g(x) H)` inserted after fixed-gate positions.
#[derive(Clone, Debug, PartialEq)]
struct DataGates {
    /// `(after this many fixed gates, first qubit, H)`
    slots: Vec<(usize, usize, HermitianMatrix)>,
    g: RealFunctionFamily,
}

#[derive(Debug)]
struct CircuitFamily {
    arch: CircuitArch,
    prep: ConceptRef,
    data: Option<DataGates>,
}

impl ConceptFamily for CircuitFamily {
    fn kind(&self) -> ConceptKind {
        self.prep.kind()
    }

    fn dim(&self) -> usize {
        self.prep.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> Result<ConceptRef, ConceptError> {
        let id = rng.random::<u32>() as f64;
        let fixed = self.arch.sample(rng);
        let circuit = match &self.data {
            None => fixed,
            Some(data) => {
                let mut ops = Vec::with_capacity(fixed.ops.len() + data.slots.len());
                let mut fixed_ops = fixed.ops.into_iter();
                let mut placed = 0;
                for (after, first, ham) in &data.slots {
                    while placed < *after {
                        if let Some(op) = fixed_ops.next() {
                            ops.push(op);
                        }
                        placed += 1;
                    }
                    ops.push(CircuitOp::Data { first: *first, ham: ham.clone(), g: data.g.sample(rng) });
                }
                ops.extend(fixed_ops);
                Circuit::new(fixed.qubits, ops)?
            }
        };
        Ok(Arc::new(CircuitConcept::new(self.prep.clone(), circuit, id)?))
    }
}

/// Random-circuit class over a label-dependent preparation.
pub fn make_circuit_class(
    arch: CircuitArch,
    prep: ConceptRef,
    max_qubits: usize,
) -> Result<ConceptClass, ConceptError> {
    arch.validate(max_qubits)?;
    if prep.dim() != 1 << arch.qubits() {
        return Err(ConceptError::Dimension { expected: 1 << arch.qubits(), got: prep.dim() });
    }
    Ok(ConceptClass::family(Arc::new(CircuitFamily { arch, prep, data: None })))
}

/// Random circuits with data-dependent gates `exp(i g(x) H)` at the given slots.
///
/// Each slot is `(after this many fixed gates, first qubit, H)`. The norm bound of
/// every `H` times the range bound of `g` must be at most 1.
pub fn make_data_dependent_circuit_class(
    arch: CircuitArch,
    slots: Vec<(usize, usize, HermitianMatrix)>,
    g: RealFunctionFamily,
    prep: ConceptRef,
    max_qubits: usize,
) -> Result<ConceptClass, ConceptError> {
    arch.validate(max_qubits)?;
    if prep.dim() != 1 << arch.qubits() {
        return Err(ConceptError::Dimension { expected: 1 << arch.qubits(), got: prep.dim() });
    }
    for (_, first, ham) in &slots {
        if ham.norm_bound() * g.range_bound() > 1.0 + 1e-12 {
            return Err(ConceptError::RangeBound { value: ham.norm_bound() * g.range_bound(), bound: 1.0 });
        }
        let d = ham.dim();
        if !d.is_power_of_two() || first + d.trailing_zeros() as usize > arch.qubits() {
            return Err(ConceptError::BadSpec("data gate does not fit the register"));
        }
    }
    let mut slots = slots;
    slots.sort_by_key(|s| s.0);
    Ok(ConceptClass::family(Arc::new(CircuitFamily { arch, prep, data: Some(DataGates { slots, g }) })))
}

/// `V(w) = Σ w_j V_j` with weights in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianDictionary {
    elements: Vec<HermitianMatrix>,
}

impl HermitianDictionary {
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self, ConceptError> {
        let dim = elements.first().ok_or(ConceptError::BadSpec("empty Hermitian dictionary"))?.dim();
        if let Some(bad) = elements.iter().find(|e| e.dim() != dim) {
            return Err(ConceptError::Dimension { expected: dim, got: bad.dim() });
        }
        Ok(Self { elements })
    }

    pub fn single(h: HermitianMatrix) -> Self {
        Self { elements: alloc::vec![h] }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Bound on `‖V(w)‖` over all admissible weights.
    pub fn norm_bound(&self) -> f64 {
        self.elements.iter().map(HermitianMatrix::norm_bound).sum()
    }

    pub fn at(&self, weights: &[f64]) -> HermitianMatrix {
        let zero = HermitianMatrix::diagonal(&alloc::vec![0.0; self.dim()]);
        self.elements.iter().zip(weights).fold(zero, |acc, (e, &w)| acc.add_scaled(w, e))
    }

    fn weight_box(&self) -> Vec<(f64, f64)> {
        alloc::vec![(-1.0, 1.0); self.elements.len()]
    }
}

fn split_params<'a>(params: &'a [f64], g: &RealFunctionFamily) -> (&'a [f64], &'a [f64]) {
    params.split_at(g.param_count())
}

fn joint_box(g: &RealFunctionFamily, v: &HermitianDictionary) -> Vec<(f64, f64)> {
    let mut bx = g.coeff_box().to_vec();
    bx.extend(v.weight_box());
    bx
}

/// Largest concept-space perturbation scale `ε` for parameters within `radius`:
/// `max(sup|Δg|, ‖ΔV‖)`.
fn joint_eps(g: &RealFunctionFamily, v: &HermitianDictionary, radius: f64) -> f64 {
    g.sup_perturbation(radius).max(radius * v.norm_bound())
}

/// `x ↦ exp(−H₀ − g(x)V) / Tr`.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsConcept {
    h0: HermitianMatrix,
    v: HermitianMatrix,
    g: RealFunction,
    params: Vec<f64>,
}

impl GibbsConcept {
    pub fn new(h0: HermitianMatrix, v: HermitianMatrix, g: RealFunction) -> Result<Self, ConceptError> {
        if h0.dim() != v.dim() {
            return Err(ConceptError::Dimension { expected: h0.dim(), got: v.dim() });
        }
        let params = g.coeffs().to_vec();
        Ok(Self { h0, v, g, params })
    }
}

/// `exp(−H)/Tr exp(−H)`, shifted by the ground energy so large `H` cannot overflow.
pub(crate) fn gibbs_state(h: &HermitianMatrix) -> Result<DensityMatrix, ConceptError> {
    let e = eigh(h.matrix())?;
    let ground = e.values.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = e.values.iter().map(|l| (-(l - ground)).exp()).sum();
    let m = e.map_real(|l| (-(l - ground)).exp() / z);
    Ok(DensityMatrix::new(m.hermitian_part())?)
}

impl Concept for GibbsConcept {
    fn kind(&self) -> ConceptKind {
        ConceptKind::State
    }

    fn dim(&self) -> usize {
        self.h0.dim()
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        Ok(ConceptOutput::State(gibbs_state(&self.h0.add_scaled(self.g.eval(x), &self.v))?))
    }

    fn params(&self) -> ParamRecord {
        ParamRecord::new("gibbs", self.params.clone())
    }
}

/// Gibbs states of `H₀ + g(x)V` with `g` from a bounded family and `V` from a dictionary.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsFamily {
    h0: HermitianMatrix,
    v: HermitianDictionary,
    g: RealFunctionFamily,
}

impl GibbsFamily {
    pub fn new(h0: HermitianMatrix, v: HermitianDictionary, g: RealFunctionFamily) -> Result<Self, ConceptError> {
        if h0.dim() != v.dim() {
            return Err(ConceptError::Dimension { expected: h0.dim(), got: v.dim() });
        }
        Ok(Self { h0, v, g })
    }
}

impl ConceptFamily for GibbsFamily {
    fn kind(&self) -> ConceptKind {
        ConceptKind::State
    }

    fn dim(&self) -> usize {
        self.h0.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> Result<ConceptRef, ConceptError> {
        self.at(&sample_box(&joint_box(&self.g, &self.v), rng))
    }

    fn parameter_box(&self) -> Option<Vec<(f64, f64)>> {
        Some(joint_box(&self.g, &self.v))
    }

    fn at(&self, params: &[f64]) -> Result<ConceptRef, ConceptError> {
        check_params(params, &joint_box(&self.g, &self.v))?;
        let (gc, w) = split_params(params, &self.g);
        let mut c = GibbsConcept::new(self.h0.clone(), self.v.at(w), self.g.member(gc)?)?;
        c.params = params.to_vec();
        Ok(Arc::new(c))
    }

    /// `2e^{ε(B+b)}·ε(b+B)` in trace norm.
    fn perturbation_bound(&self, radius: f64) -> Option<f64> {
        let eps = joint_eps(&self.g, &self.v, radius);
        let (b, big_b) = (self.v.norm_bound(), self.g.range_bound());
        Some(2.0 * (eps * (big_b + b)).exp() * eps * (b + big_b))
    }
}

pub fn make_gibbs_class(
    h0: HermitianMatrix,
    v: HermitianDictionary,
    g: RealFunctionFamily,
) -> Result<ConceptClass, ConceptError> {
    Ok(ConceptClass::family(Arc::new(GibbsFamily::new(h0, v, g)?)))
}

/// `x ↦ e^{i g(x) H} ρ(x) e^{−i g(x) H}` for a label-dependent probe `ρ(x)`.
#[derive(Clone, Debug)]
pub struct PhaseShiftConcept {
    probe: ConceptRef,
    h: HermitianMatrix,
    g: RealFunction,
    params: Vec<f64>,
}

impl PhaseShiftConcept {
    pub fn new(probe: ConceptRef, h: HermitianMatrix, g: RealFunction) -> Result<Self, ConceptError> {
        if probe.dim() != h.dim() {
            return Err(ConceptError::Dimension { expected: probe.dim(), got: h.dim() });
        }
        let params = g.coeffs().to_vec();
        Ok(Self { probe, h, g, params })
    }
}

impl Concept for PhaseShiftConcept {
    fn kind(&self) -> ConceptKind {
        self.probe.kind()
    }

    fn dim(&self) -> usize {
        self.probe.dim()
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        let u = matrix_exp_hermitian(&self.h, ExpMode::Unitary(self.g.eval(x)))?;
        Ok(self.probe.eval(x)?.conjugate(&u))
    }

    fn params(&self) -> ParamRecord {
        ParamRecord::new("phase_shift", self.params.clone())
    }
}

/// Phase shifts whose depth `g(x)` depends on the label. Probes are unentangled.
#[derive(Clone, Debug)]
pub struct PhaseShiftFamily {
    probe: ConceptRef,
    h: HermitianDictionary,
    g: RealFunctionFamily,
}

impl PhaseShiftFamily {
    pub fn new(probe: ConceptRef, h: HermitianDictionary, g: RealFunctionFamily) -> Result<Self, ConceptError> {
        if probe.dim() != h.dim() {
            return Err(ConceptError::Dimension { expected: probe.dim(), got: h.dim() });
        }
        Ok(Self { probe, h, g })
    }
}

impl ConceptFamily for PhaseShiftFamily {
    fn kind(&self) -> ConceptKind {
        self.probe.kind()
    }

    fn dim(&self) -> usize {
        self.probe.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> Result<ConceptRef, ConceptError> {
        self.at(&sample_box(&joint_box(&self.g, &self.h), rng))
    }

    fn parameter_box(&self) -> Option<Vec<(f64, f64)>> {
        Some(joint_box(&self.g, &self.h))
    }

    fn at(&self, params: &[f64]) -> Result<ConceptRef, ConceptError> {
        check_params(params, &joint_box(&self.g, &self.h))?;
        let (gc, w) = split_params(params, &self.g);
        let mut c = PhaseShiftConcept::new(self.probe.clone(), self.h.at(w), self.g.member(gc)?)?;
        c.params = params.to_vec();
        Ok(Arc::new(c))
    }

    /// `2e^{ε(B+b)+Bb}·ε(b+B)`.
    fn perturbation_bound(&self, radius: f64) -> Option<f64> {
        let eps = joint_eps(&self.g, &self.h, radius);
        let (b, big_b) = (self.h.norm_bound(), self.g.range_bound());
        Some(2.0 * (eps * (big_b + b) + big_b * b).exp() * eps * (b + big_b))
    }
}

pub fn make_phaseshift_class(
    probe: ConceptRef,
    h: HermitianDictionary,
    g: RealFunctionFamily,
) -> Result<ConceptClass, ConceptError> {
    Ok(ConceptClass::family(Arc::new(PhaseShiftFamily::new(probe, h, g)?)))
}

/// `x ↦` spectral projector of `H₀ + g(x)V` below `energy`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowEnergyConcept {
    h0: HermitianMatrix,
    v: HermitianMatrix,
    g: RealFunction,
    energy: f64,
    params: Vec<f64>,
}

impl Concept for LowEnergyConcept {
    fn kind(&self) -> ConceptKind {
        ConceptKind::Projector
    }

    fn dim(&self) -> usize {
        self.h0.dim()
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        let h = self.h0.add_scaled(self.g.eval(x), &self.v);
        Ok(ConceptOutput::Projector(low_energy_projector(&h, self.energy)?))
    }

    fn params(&self) -> ParamRecord {
        ParamRecord::new("low_energy", self.params.clone())
    }
}

/// Low-energy projectors of gapped perturbations of `H₀`.
///
/// `H₀` must have no eigenvalue in `[E − 2δ, E + 2δ]`, and `‖g(x)V‖ ≤ B·b` must stay
/// below `δ`, so every member keeps the window `(E − δ, E + δ)` free.
#[derive(Clone, Debug, PartialEq)]
pub struct LowEnergyFamily {
    h0: HermitianMatrix,
    v: HermitianDictionary,
    g: RealFunctionFamily,
    energy: f64,
    gap: f64,
}

impl LowEnergyFamily {
    pub fn new(
        h0: HermitianMatrix,
        v: HermitianDictionary,
        g: RealFunctionFamily,
        energy: f64,
        gap: f64,
    ) -> Result<Self, ConceptError> {
        if h0.dim() != v.dim() {
            return Err(ConceptError::Dimension { expected: h0.dim(), got: v.dim() });
        }
        if !(gap > 0.0) {
            return Err(ConceptError::BadSpec("gap must be positive"));
        }
        let (lo, hi) = (energy - 2.0 * gap, energy + 2.0 * gap);
        if let Some(&eigenvalue) = eigh(h0.matrix())?.values.iter().find(|&&l| l >= lo && l <= hi) {
            return Err(ConceptError::GapViolation { eigenvalue, lo, hi });
        }
        let norm = g.range_bound() * v.norm_bound();
        if norm >= gap {
            return Err(ConceptError::PerturbationTooLarge { norm, gap });
        }
        Ok(Self { h0, v, g, energy, gap })
    }
}

impl ConceptFamily for LowEnergyFamily {
    fn kind(&self) -> ConceptKind {
        ConceptKind::Projector
    }

    fn dim(&self) -> usize {
        self.h0.dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> Result<ConceptRef, ConceptError> {
        self.at(&sample_box(&joint_box(&self.g, &self.v), rng))
    }

    fn parameter_box(&self) -> Option<Vec<(f64, f64)>> {
        Some(joint_box(&self.g, &self.v))
    }

    fn at(&self, params: &[f64]) -> Result<ConceptRef, ConceptError> {
        check_params(params, &joint_box(&self.g, &self.v))?;
        let (gc, w) = split_params(params, &self.g);
        Ok(Arc::new(LowEnergyConcept {
            h0: self.h0.clone(),
            v: self.v.at(w),
            g: self.g.member(gc)?,
            energy: self.energy,
            params: params.to_vec(),
        }))
    }

    /// `min(1, π/(4δ)·ε(b+B))` in operator norm.
    fn perturbation_bound(&self, radius: f64) -> Option<f64> {
        let eps = joint_eps(&self.g, &self.v, radius);
        let (b, big_b) = (self.v.norm_bound(), self.g.range_bound());
        Some((PI / (4.0 * self.gap) * eps * (b + big_b)).min(1.0))
    }
}

pub fn make_lowenergy_class(
    h0: HermitianMatrix,
    v: HermitianDictionary,
    g: RealFunctionFamily,
    energy: f64,
    gap: f64,
) -> Result<ConceptClass, ConceptError> {
    Ok(ConceptClass::family(Arc::new(LowEnergyFamily::new(h0, v, g, energy, gap)?)))
}

/// Qubit projector `|0⟩⟨0|` when the first coordinate lies in `[a, b]`, else `|1⟩⟨1|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalConcept {
    pub a: f64,
    pub b: f64,
}

impl Concept for IntervalConcept {
    fn kind(&self) -> ConceptKind {
        ConceptKind::Projector
    }

    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError> {
        let t = *x.coordinates().first().ok_or_else(|| ConceptError::UnknownLabel(x.clone()))?;
        let k = if self.a <= t && t <= self.b { 0 } else { 1 };
        Ok(ConceptOutput::Projector(Projector::basis_subset(2, &[k])))
    }

    fn params(&self) -> ParamRecord {
        ParamRecord::new("interval", alloc::vec![self.a, self.b])
    }
}

/// Intervals `[a, b]` with both endpoints in `[lo, hi]`; `a > b` is the empty interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalFamily {
    lo: f64,
    hi: f64,
}

impl IntervalFamily {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ConceptError> {
        if !(lo < hi) {
            return Err(ConceptError::BadSpec("interval family needs lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    /// Every interval with endpoints on the given points, plus the empty interval.
    ///
    /// On labels drawn from those points this realizes every restriction of the family.
    pub fn grid_class(&self, points: &[f64]) -> Result<ConceptClass, ConceptError> {
        let mut pts: Vec<f64> = points.iter().copied().filter(|p| *p >= self.lo && *p <= self.hi).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut members: Vec<ConceptRef> = alloc::vec![Arc::new(IntervalConcept { a: self.hi, b: self.lo })];
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i..] {
                members.push(Arc::new(IntervalConcept { a, b }));
            }
        }
        ConceptClass::finite(members)
    }
}

impl ConceptFamily for IntervalFamily {
    fn kind(&self) -> ConceptKind {
        ConceptKind::Projector
    }

    fn dim(&self) -> usize {
        2
    }

    fn sample(&self, rng: &mut StreamRng) -> Result<ConceptRef, ConceptError> {
        self.at(&sample_box(&[(self.lo, self.hi); 2], rng))
    }

    fn parameter_box(&self) -> Option<Vec<(f64, f64)>> {
        Some(alloc::vec![(self.lo, self.hi); 2])
    }

    fn at(&self, params: &[f64]) -> Result<ConceptRef, ConceptError> {
        check_params(params, &[(self.lo, self.hi); 2])?;
        Ok(Arc::new(IntervalConcept { a: params[0], b: params[1] }))
    }
}
