use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;

use super::eigen::{eigh, singular_values};
use super::matrix::{ComplexMatrix, C64};
use super::types::{DensityMatrix, HermitianMatrix, Projector};
use super::{same_dim, LinalgError, POSITIVE_CUTOFF, TOL_GAP, TOL_PSD};

/// Schatten index: a finite q ≥ 1 or ∞ (operator norm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schatten {
    Finite(f64),
    Infinity,
}

fn singular_spectrum(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    // Hermitian input: singular values are |eigenvalues|, computed more accurately.
    if m.hermiticity_defect() <= 1e-14 * (1.0 + m.max_abs()) {
        let mut s: Vec<f64> = eigh(m)?.values.iter().map(|v| v.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    } else {
        singular_values(m)
    }
}

pub fn schatten_norm(m: &ComplexMatrix, q: Schatten) -> Result<f64, LinalgError> {
    let s = singular_spectrum(m)?;
    Ok(match q {
        Schatten::Infinity => s.first().copied().unwrap_or(0.0),
        Schatten::Finite(q) => {
            assert!(q >= 1.0, "Schatten index must be at least 1");
            s.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
        }
    })
}

pub fn operator_norm(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    schatten_norm(m, Schatten::Infinity)
}

pub fn trace_norm(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(singular_spectrum(m)?.iter().sum())
}

/// ½‖a − b‖₁
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, LinalgError> {
    same_dim(a.matrix(), b.matrix())?;
    let diff = a.matrix() - b.matrix();
    let half: f64 = 0.5 * eigh(&diff)?.values.iter().map(|v| v.abs()).sum::<f64>();
    Ok(half.clamp(0.0, 1.0))
}

/// Eigenvalues of a density matrix below this are treated as its kernel.
const SUPPORT_CUTOFF: f64 = 1e-14;

/// ‖√a √b‖₁ = Tr √(√a b √a)
///
/// Computed on the support of whichever argument has the smaller numerical rank: with
/// `a = VΛV†` restricted to `Λ > 1e-14`, the nonzero spectrum of `√a b √a` is that of
/// `Λ^½ V†bV Λ^½`. Dropping the kernel keeps roundoff-level eigenvalues from leaking
/// in through the square root.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, LinalgError> {
    same_dim(a.matrix(), b.matrix())?;
    let support = |m: &DensityMatrix| -> Result<_, LinalgError> {
        let e = eigh(m.matrix())?;
        if let Some(&min) = e.values.first() {
            if min < -TOL_PSD {
                return Err(LinalgError::NotPositive { min_eigenvalue: min });
            }
        }
        let keep: Vec<usize> = (0..m.dim()).filter(|&k| e.values[k] > SUPPORT_CUTOFF).collect();
        Ok((e, keep))
    };
    let (ea, keep_a) = support(a)?;
    let (eb, keep_b) = support(b)?;
    let (e, keep, other) = if keep_b.len() < keep_a.len() { (eb, keep_b, a) } else { (ea, keep_a, b) };
    let (d, r) = (a.dim(), keep.len());
    if r == 0 {
        return Ok(0.0);
    }
    // W = V_keep Λ^½, inner = W† other W
    let w: Vec<Vec<C64>> = keep
        .iter()
        .map(|&k| {
            let s = e.values[k].sqrt();
            (0..d).map(|row| e.vectors[(row, k)] * s).collect()
        })
        .collect();
    let ow: Vec<Vec<C64>> = w.iter().map(|col| other.matrix().mul_vec(col)).collect();
    let inner = ComplexMatrix::from_fn(r, |i, j| w[i].iter().zip(&ow[j]).map(|(x, y)| x.conj() * y).sum());
    let f: f64 = eigh(&inner)?.values.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// √(2(1 − F))
pub fn bures_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, LinalgError> {
    Ok((2.0 * (1.0 - fidelity(a, b)?)).max(0.0).sqrt())
}

/// Projector onto the strictly positive part of `si − sj`.
pub fn helstrom_projector(si: &DensityMatrix, sj: &DensityMatrix) -> Result<Projector, LinalgError> {
    same_dim(si.matrix(), sj.matrix())?;
    let e = eigh(&(si.matrix() - sj.matrix()))?;
    let p = e.map_real(|l| if l > POSITIVE_CUTOFF { 1.0 } else { 0.0 });
    Ok(Projector::from_trusted(p.hermitian_part()))
}

/// Which exponential [`matrix_exp_hermitian`] computes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExpMode {
    /// exp(i·scale·H), unitary.
    Unitary(f64),
    /// exp(−scale·H), positive definite.
    Real(f64),
}

pub fn matrix_exp_hermitian(h: &HermitianMatrix, mode: ExpMode) -> Result<ComplexMatrix, LinalgError> {
    let e = eigh(h.matrix())?;
    let out = match mode {
        ExpMode::Unitary(s) => e.map(|l| C64::from_polar(1.0, s * l)),
        ExpMode::Real(s) => e.map_real(|l| (-s * l).exp()),
    };
    if !out.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    Ok(out)
}

/// Spectral projector of `h` onto eigenvalues strictly below `energy`.
pub fn low_energy_projector(h: &HermitianMatrix, energy: f64) -> Result<Projector, LinalgError> {
    let e = eigh(h.matrix())?;
    if let Some(&bad) = e.values.iter().find(|&&l| (l - energy).abs() < TOL_GAP) {
        return Err(LinalgError::DegenerateThreshold { eigenvalue: bad, threshold: energy, tol: TOL_GAP });
    }
    let p = e.map_real(|l| if l < energy { 1.0 } else { 0.0 });
    Ok(Projector::from_trusted(p.hermitian_part()))
}
