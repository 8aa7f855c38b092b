//! Concepts: projector-valued or state-valued functions of a classical label.
//!
//! A [`Concept`] maps a [`Label`] to a [`Projector`] (hypotheses scored by
//! `L_p = 1 − Tr[ρΠ]`) or to a [`DensityMatrix`] (scored by `L_s = d_tr(σ, ρ)`).
//! A [`ConceptClass`] is either an explicit finite list or a [`ConceptFamily`]
//! that can sample members and, for low-dimensional families, evaluate a
//! member from a parameter vector.

mod families;
mod functions;
mod source;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Debug;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::qcore::{operator_norm, trace_distance, trace_norm, ComplexMatrix, DensityMatrix, LinalgError, Projector};
use crate::rng::StreamRng;
use crate::sum::CompensatedSum;

pub use families::{
    make_circuit_class, make_data_dependent_circuit_class, make_gibbs_class, make_lowenergy_class,
    make_phaseshift_class, BasisEncoding, Circuit, CircuitArch, CircuitConcept, CircuitOp, ConstantConcept,
    GibbsConcept, GibbsFamily, HermitianDictionary, IntervalConcept, IntervalFamily, LowEnergyConcept, LowEnergyFamily,
    NormalizedProjector, PhaseShiftConcept, PhaseShiftFamily, TableConcept, DEFAULT_MAX_QUBITS,
};
pub use functions::{Feature, RealFunction, RealFunctionFamily};
pub use source::{CqSource, DepolarizedSource, FiniteSource, UniformBoxSource};

/// Distinct-restriction threshold on per-label operator distance.
pub const RESTRICTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConceptError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("expected a {expected:?}-valued output, got {got:?}")]
    KindMismatch { expected: ConceptKind, got: ConceptKind },
    #[error("output dimension {got} does not match {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("label {0:?} is outside this concept's domain")]
    UnknownLabel(Label),
    #[error("{qubits} qubits exceed the dense cap of {cap}")]
    CapExceeded { qubits: usize, cap: usize },
    #[error("function value bound {value} exceeds the declared range bound {bound}")]
    RangeBound { value: f64, bound: f64 },
    #[error("unperturbed eigenvalue {eigenvalue} lies in the forbidden window [{lo}, {hi}]")]
    GapViolation { eigenvalue: f64, lo: f64, hi: f64 },
    #[error("perturbation norm bound {norm} is not below the gap {gap}")]
    PerturbationTooLarge { norm: f64, gap: f64 },
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("parameter {index} = {value} lies outside [{lo}, {hi}]")]
    ParameterRange { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("family has no parameter map")]
    NotParametric,
    #[error("a concept class needs at least one member")]
    EmptyClass,
    #[error("invalid family specification: {0}")]
    BadSpec(&'static str),
}

/// A classical label: a real vector or a bitstring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Real(Vec<f64>),
    Bits(Vec<bool>),
}

impl Label {
    pub fn scalar(x: f64) -> Self {
        Label::Real(alloc::vec![x])
    }

    /// Coordinates as reals (bits read as 0/1).
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            Label::Real(v) => v.clone(),
            Label::Bits(b) => b.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Big-endian integer value of a bitstring label.
    pub fn bit_index(&self) -> Option<usize> {
        match self {
            Label::Bits(b) => Some(b.iter().fold(0usize, |acc, &x| (acc << 1) | x as usize)),
            Label::Real(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConceptKind {
    Projector,
    State,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConceptOutput {
    Projector(Projector),
    State(DensityMatrix),
}

impl ConceptOutput {
    pub fn kind(&self) -> ConceptKind {
        match self {
            ConceptOutput::Projector(_) => ConceptKind::Projector,
            ConceptOutput::State(_) => ConceptKind::State,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        match self {
            ConceptOutput::Projector(p) => p.matrix(),
            ConceptOutput::State(s) => s.matrix(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix().dim()
    }

    pub fn into_projector(self) -> Result<Projector, ConceptError> {
        match self {
            ConceptOutput::Projector(p) => Ok(p),
            other => Err(ConceptError::KindMismatch { expected: ConceptKind::Projector, got: other.kind() }),
        }
    }

    pub fn into_state(self) -> Result<DensityMatrix, ConceptError> {
        match self {
            ConceptOutput::State(s) => Ok(s),
            other => Err(ConceptError::KindMismatch { expected: ConceptKind::State, got: other.kind() }),
        }
    }

    /// `U · U†` applied to the output; the kind is preserved.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        match self {
            ConceptOutput::Projector(p) => ConceptOutput::Projector(p.conjugate(u)),
            ConceptOutput::State(s) => ConceptOutput::State(s.conjugate(u)),
        }
    }

    /// The norm the pseudometric uses for this kind: trace norm for states,
    /// operator norm for projectors.
    pub fn distance(&self, other: &Self) -> Result<f64, ConceptError> {
        let diff = self.matrix() - other.matrix();
        Ok(match self.kind() {
            ConceptKind::State => trace_norm(&diff)?,
            ConceptKind::Projector => operator_norm(&diff)?,
        })
    }
}

/// Flattened parameters identifying a concept, for reports and net serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub family: String,
    pub values: Vec<f64>,
}

impl ParamRecord {
    pub fn new(family: &str, values: Vec<f64>) -> Self {
        Self { family: String::from(family), values }
    }
}

/// A deterministic map from labels to projectors or states.
pub trait Concept: Debug + Send + Sync {
    fn kind(&self) -> ConceptKind;
    fn dim(&self) -> usize;
    fn eval(&self, x: &Label) -> Result<ConceptOutput, ConceptError>;
    fn params(&self) -> ParamRecord;

    fn eval_projector(&self, x: &Label) -> Result<Projector, ConceptError> {
        self.eval(x)?.into_projector()
    }

    fn eval_state(&self, x: &Label) -> Result<DensityMatrix, ConceptError> {
        self.eval(x)?.into_state()
    }
}

pub type ConceptRef = Arc<dyn Concept>;

/// An infinite concept family with a seeded sampler, and optionally a parameter map.
pub trait ConceptFamily: Debug + Send + Sync {
    fn kind(&self) -> ConceptKind;
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut StreamRng) -> Result<ConceptRef, ConceptError>;

    /// Box of admissible parameters, for families with a parameter map.
    fn parameter_box(&self) -> Option<Vec<(f64, f64)>> {
        None
    }

    fn at(&self, _params: &[f64]) -> Result<ConceptRef, ConceptError> {
        Err(ConceptError::NotParametric)
    }

    /// Largest pseudometric distance between members whose parameters differ by
    /// at most `radius` in every coordinate, when the family is Lipschitz in them.
    fn perturbation_bound(&self, _radius: f64) -> Option<f64> {
        None
    }
}

pub(crate) fn check_params(params: &[f64], bx: &[(f64, f64)]) -> Result<(), ConceptError> {
    if params.len() != bx.len() {
        return Err(ConceptError::ParameterCount { expected: bx.len(), got: params.len() });
    }
    for (index, (&value, &(lo, hi))) in params.iter().zip(bx).enumerate() {
        if !(value >= lo - 1e-12 && value <= hi + 1e-12) {
            return Err(ConceptError::ParameterRange { index, value, lo, hi });
        }
    }
    Ok(())
}

pub(crate) fn sample_box(bx: &[(f64, f64)], rng: &mut StreamRng) -> Vec<f64> {
    use rand::Rng;
    bx.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect()
}

#[derive(Clone, Debug)]
pub enum ClassMembers {
    Finite(Vec<ConceptRef>),
    Family(Arc<dyn ConceptFamily>),
}

/// A set of hypotheses sharing kind and output dimension.
#[derive(Clone, Debug)]
pub struct ConceptClass {
    kind: ConceptKind,
    dim: usize,
    members: ClassMembers,
}

impl ConceptClass {
    pub fn finite(members: Vec<ConceptRef>) -> Result<Self, ConceptError> {
        let first = members.first().ok_or(ConceptError::EmptyClass)?;
        let (kind, dim) = (first.kind(), first.dim());
        for m in &members {
            if m.kind() != kind {
                return Err(ConceptError::KindMismatch { expected: kind, got: m.kind() });
            }
            if m.dim() != dim {
                return Err(ConceptError::Dimension { expected: dim, got: m.dim() });
            }
        }
        Ok(Self { kind, dim, members: ClassMembers::Finite(members) })
    }

    pub fn family(family: Arc<dyn ConceptFamily>) -> Self {
        Self { kind: family.kind(), dim: family.dim(), members: ClassMembers::Family(family) }
    }

    pub fn kind(&self) -> ConceptKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> Option<&[ConceptRef]> {
        match &self.members {
            ClassMembers::Finite(m) => Some(m),
            ClassMembers::Family(_) => None,
        }
    }

    pub fn as_family(&self) -> Option<&Arc<dyn ConceptFamily>> {
        match &self.members {
            ClassMembers::Family(f) => Some(f),
            ClassMembers::Finite(_) => None,
        }
    }

    /// One member: uniform over a finite list, or the family's sampler.
    pub fn sample(&self, rng: &mut StreamRng) -> Result<ConceptRef, ConceptError> {
        use rand::Rng;
        match &self.members {
            ClassMembers::Finite(m) => Ok(m[rng.random_range(0..m.len())].clone()),
            ClassMembers::Family(f) => f.sample(rng),
        }
    }
}

/// `L_p = 1 − Tr[ρΠ(x)]` for projector concepts, `L_s = d_tr(σ(x), ρ)` for state concepts.
pub fn loss(concept: &dyn Concept, x: &Label, rho: &DensityMatrix) -> Result<f64, ConceptError> {
    if concept.dim() != rho.dim() {
        return Err(ConceptError::Dimension { expected: concept.dim(), got: rho.dim() });
    }
    Ok(match concept.eval(x)? {
        ConceptOutput::Projector(p) => (1.0 - rho.probability(&p)?).clamp(0.0, 1.0),
        ConceptOutput::State(s) => trace_distance(&s, rho)?,
    })
}

/// Average loss over a dataset whose quantum parts are known. Oracle use only.
pub fn empirical_risk(concept: &dyn Concept, data: &[(Label, DensityMatrix)]) -> Result<f64, ConceptError> {
    let mut acc = CompensatedSum::new();
    for (x, rho) in data {
        acc.add(loss(concept, x, rho)?);
    }
    Ok(acc.value() / data.len().max(1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Summed exactly over a finite label distribution.
    pub exact: bool,
}

/// True risk: exact over a finite label distribution, else Monte Carlo with standard error.
pub fn true_risk(
    concept: &dyn Concept,
    source: &dyn CqSource,
    mc_samples: usize,
    rng: &mut StreamRng,
) -> Result<RiskEstimate, ConceptError> {
    if let Some(support) = source.support() {
        let mut acc = CompensatedSum::new();
        for (x, w) in support {
            acc.add(w * loss(concept, x, &source.channel(x)?)?);
        }
        return Ok(RiskEstimate { value: acc.value(), std_error: 0.0, exact: true });
    }
    let samples = mc_samples.max(2);
    let mut sum = CompensatedSum::new();
    let mut sq = CompensatedSum::new();
    for _ in 0..samples {
        let x = source.sample_label(rng);
        let l = loss(concept, &x, &source.channel(&x)?)?;
        sum.add(l);
        sq.add(l * l);
    }
    let n = samples as f64;
    let mean = sum.value() / n;
    let var = ((sq.value() / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(RiskEstimate { value: mean, std_error: (var / n).sqrt(), exact: false })
}

/// Largest per-label distance (in the kind's norm) between two concepts on the labels.
pub fn max_label_distance(a: &dyn Concept, b: &dyn Concept, labels: &[Label]) -> Result<f64, ConceptError> {
    let mut worst = 0.0f64;
    for x in labels {
        worst = worst.max(operator_norm(&(a.eval(x)?.matrix() - b.eval(x)?.matrix()))?);
    }
    Ok(worst)
}

/// Number of distinct restrictions of a finite list of concepts to the labels.
pub fn restriction_count(members: &[ConceptRef], labels: &[Label]) -> Result<usize, ConceptError> {
    let outputs: Vec<Vec<ComplexMatrix>> = members
        .iter()
        .map(|c| labels.iter().map(|x| Ok(c.eval(x)?.matrix().clone())).collect::<Result<_, ConceptError>>())
        .collect::<Result<_, _>>()?;
    let mut reps: Vec<usize> = Vec::new();
    for (i, out) in outputs.iter().enumerate() {
        let mut seen = false;
        for &r in &reps {
            let mut same = true;
            for (a, b) in out.iter().zip(&outputs[r]) {
                if operator_norm(&(a - b))? > RESTRICTION_TOL {
                    same = false;
                    break;
                }
            }
            if same {
                seen = true;
                break;
            }
        }
        if !seen {
            reps.push(i);
        }
    }
    Ok(reps.len())
}

#[cfg(test)]
mod tests;
