//! Complex linear algebra and quantum-object primitives.
//!
//! Tolerance ladder: hermiticity 1e-10, PSD slack 1e-10, idempotency 1e-9.

mod eigen;
mod matrix;
mod ops;
pub mod random;
mod types;

pub use eigen::{eigh, singular_values, Eigh};
pub use matrix::{ComplexMatrix, MatrixJson, C64};
pub use ops::{
    bures_distance, fidelity, helstrom_projector, low_energy_projector, matrix_exp_hermitian, operator_norm,
    schatten_norm, trace_distance, trace_norm, ExpMode, Schatten,
};
pub use types::{DensityMatrix, HermitianMatrix, Projector};

pub const TOL_HERM: f64 = 1e-10;
pub const TOL_PSD: f64 = 1e-10;
pub const TOL_TRACE: f64 = 1e-10;
pub const TOL_IDEMPOTENT: f64 = 1e-9;
pub const TOL_GAP: f64 = 1e-8;
/// Eigenvalues above this count as strictly positive in positive-part projectors.
pub const POSITIVE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("bad shape: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },
    #[error("matrix is not idempotent (‖P²−P‖ = {defect:.3e})")]
    NotIdempotent { defect: f64 },
    #[error("operator norm {norm} exceeds declared bound {bound}")]
    NormBound { norm: f64, bound: f64 },
    #[error("eigenvalue {eigenvalue} lies within {tol:e} of threshold {threshold}")]
    DegenerateThreshold { eigenvalue: f64, threshold: f64, tol: f64 },
    #[error("Jacobi iteration did not converge")]
    NoConvergence,
}

pub(crate) fn same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(), LinalgError> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { left: a.dim(), right: b.dim() })
    }
}
