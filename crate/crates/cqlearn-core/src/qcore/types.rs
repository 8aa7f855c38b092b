use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;

use serde::{Deserialize, Serialize};

use super::eigen::eigh;
use super::matrix::{ComplexMatrix, C64};
use super::{same_dim, LinalgError, TOL_HERM, TOL_IDEMPOTENT, TOL_PSD, TOL_TRACE};

/// Positive semi-definite, unit-trace operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self, LinalgError> {
        let defect = mat.hermiticity_defect();
        if defect > TOL_HERM {
            return Err(LinalgError::NotHermitian { defect });
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > TOL_TRACE {
            return Err(LinalgError::BadTrace { trace });
        }
        let min_eigenvalue = eigh(&mat)?.values[0];
        if min_eigenvalue < -TOL_PSD {
            return Err(LinalgError::NotPositive { min_eigenvalue });
        }
        Ok(Self(mat))
    }

    /// Wraps a matrix the caller has already validated.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        Self(mat)
    }

    /// |ψ⟩⟨ψ| for the normalization of `psi`.
    pub fn pure(psi: &[C64]) -> Self {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm > 0.0, "zero vector has no pure state");
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self(ComplexMatrix::outer(&unit, &unit))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64]) -> Result<Self, LinalgError> {
        if probs.iter().any(|&p| !(p >= -TOL_PSD)) {
            let min_eigenvalue = probs.iter().cloned().fold(f64::INFINITY, f64::min);
            return Err(LinalgError::NotPositive { min_eigenvalue });
        }
        let trace: f64 = probs.iter().sum();
        if (trace - 1.0).abs() > TOL_TRACE {
            return Err(LinalgError::BadTrace { trace });
        }
        Ok(Self(ComplexMatrix::from_real_diagonal(probs)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Re Tr[ρ Π]
    pub fn probability(&self, proj: &Projector) -> Result<f64, LinalgError> {
        same_dim(&self.0, proj.matrix())?;
        Ok(self.0.trace_product_real(proj.matrix()).clamp(0.0, 1.0))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.0.off_diagonal_max() <= tol
    }

    /// Diagonal entries clamped into [0, 1].
    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal_real().into_iter().map(|p| p.clamp(0.0, 1.0)).collect()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }

    /// (1−p)ρ + p·1/d
    pub fn depolarize(&self, p: f64) -> Self {
        let d = self.dim();
        let mixed = ComplexMatrix::identity(d).scale_real(p / d as f64);
        Self(&self.0.scale_real(1.0 - p) + &mixed)
    }

    /// U ρ U† for unitary U; the caller guarantees unitarity.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self(self.0.conjugate_by(u).hermitian_part())
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = LinalgError;
    fn try_from(m: ComplexMatrix) -> Result<Self, LinalgError> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.0
    }
}

/// Hermitian idempotent operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct Projector(ComplexMatrix);

impl Projector {
    pub fn new(mat: ComplexMatrix) -> Result<Self, LinalgError> {
        let defect = mat.hermiticity_defect();
        if defect > TOL_HERM {
            return Err(LinalgError::NotHermitian { defect });
        }
        let sq = mat.matmul(&mat);
        let diff = &sq - &mat;
        let e = eigh(&diff)?;
        let idem = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if idem > TOL_IDEMPOTENT {
            return Err(LinalgError::NotIdempotent { defect: idem });
        }
        Ok(Self(mat))
    }

    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        Self(mat)
    }

    pub fn zero(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    /// Projector onto the line spanned by `v`.
    pub fn rank_one(v: &[C64]) -> Self {
        Self(DensityMatrix::pure(v).0)
    }

    /// Diagonal projector onto the listed computational basis states.
    pub fn basis_subset(dim: usize, accept: &[usize]) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        for &k in accept {
            m[(k, k)] = C64::new(1.0, 0.0);
        }
        Self(m)
    }

    /// Diagonal projector from a 0/1 mask.
    pub fn from_mask(mask: &[bool]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(&mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
    }

    pub fn complement(&self) -> Self {
        Self(&ComplexMatrix::identity(self.dim()) - &self.0)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round() as usize
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.0.off_diagonal_max() <= tol
    }

    /// Accepting computational basis states, valid when the projector is diagonal.
    pub fn diagonal_mask(&self) -> Vec<bool> {
        self.0.diagonal_real().into_iter().map(|v| v > 0.5).collect()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }

    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self(self.0.conjugate_by(u).hermitian_part())
    }
}

impl TryFrom<ComplexMatrix> for Projector {
    type Error = LinalgError;
    fn try_from(m: ComplexMatrix) -> Result<Self, LinalgError> {
        Self::new(m)
    }
}

impl From<Projector> for ComplexMatrix {
    fn from(p: Projector) -> Self {
        p.0
    }
}

/// Hermitian operator with a declared operator-norm bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    mat: ComplexMatrix,
    norm_bound: f64,
}

impl HermitianMatrix {
    pub fn new(mat: ComplexMatrix, norm_bound: f64) -> Result<Self, LinalgError> {
        let defect = mat.hermiticity_defect();
        if defect > TOL_HERM {
            return Err(LinalgError::NotHermitian { defect });
        }
        let norm = eigh(&mat)?.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > norm_bound + 1e-9 {
            return Err(LinalgError::NormBound { norm, bound: norm_bound });
        }
        Ok(Self { mat, norm_bound })
    }

    /// Uses the exact operator norm as the bound.
    pub fn tight(mat: ComplexMatrix) -> Result<Self, LinalgError> {
        let defect = mat.hermiticity_defect();
        if defect > TOL_HERM {
            return Err(LinalgError::NotHermitian { defect });
        }
        let norm = eigh(&mat)?.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self { mat, norm_bound: norm })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let norm_bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self { mat: ComplexMatrix::from_real_diagonal(values), norm_bound }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// self + s·other, with bound |norm| + |s|·|other norm|.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        Self { mat: &self.mat + &other.mat.scale_real(s), norm_bound: self.norm_bound + s.abs() * other.norm_bound }
    }
}
