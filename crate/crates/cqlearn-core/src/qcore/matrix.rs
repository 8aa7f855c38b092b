use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};
#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LinalgError;

pub type C64 = Complex64;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds from row-major entries; rejects non-square input and non-finite values.
    pub fn from_rows(dim: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(LinalgError::Shape { expected: dim * dim, got: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// |v⟩⟨w|
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len(), "outer product of unequal vectors");
        Self::from_fn(v.len(), |r, c| v[r] * w[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |M − M†| entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Largest modulus among off-diagonal entries.
    pub fn off_diagonal_max(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                if r != c {
                    worst = worst.max(self[(r, c)].norm());
                }
            }
        }
        worst
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * d..(k + 1) * d];
                let dst = &mut out.data[r * d..(r + 1) * d];
                for (x, y) in dst.iter_mut().zip(orow) {
                    *x += a * y;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "matrix-vector dimension mismatch");
        (0..self.dim).map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// U M U†
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |r, c| self[(r / b, c / b)] * other[(r % b, c % b)])
    }

    /// Re Tr[self · other]
    pub fn trace_product_real(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "trace product dimension mismatch");
        let d = self.dim;
        let mut acc = 0.0;
        for r in 0..d {
            for k in 0..d {
                acc += (self.data[r * d + k] * other.data[k * d + r]).re;
            }
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            dim: self.dim,
            re: (0..self.dim).map(|r| self.row(r).iter().map(|z| z.re).collect()).collect(),
            im: (0..self.dim).map(|r| self.row(r).iter().map(|z| z.im).collect()).collect(),
        }
    }

    pub fn from_json(json: &MatrixJson) -> Result<Self, LinalgError> {
        let d = json.dim;
        if json.re.len() != d || json.im.len() != d {
            return Err(LinalgError::Shape { expected: d, got: json.re.len().min(json.im.len()) });
        }
        let mut data = Vec::with_capacity(d * d);
        for (rr, ri) in json.re.iter().zip(&json.im) {
            if rr.len() != d || ri.len() != d {
                return Err(LinalgError::Shape { expected: d, got: rr.len().min(ri.len()) });
            }
            data.extend(rr.iter().zip(ri).map(|(&a, &b)| C64::new(a, b)));
        }
        Self::from_rows(d, data)
    }
}

/// Wire format `{dim, re[][], im[][]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        Self::from_json(&json).map_err(serde::de::Error::custom)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(3));
        assert_eq!(k, ComplexMatrix::identity(6));
    }

    #[test]
    fn kron_index_layout() {
        let a = ComplexMatrix::from_rows(2, vec![c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]).unwrap();
        let b = ComplexMatrix::from_rows(2, vec![c(0., 1.), c(0., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        let k = a.kron(&b);
        assert_eq!(k[(0, 0)], c(0., 1.));
        assert_eq!(k[(1, 3)], c(2., 0.));
        assert_eq!(k[(2, 0)], c(0., 3.));
        assert_eq!(k[(3, 3)], c(4., 0.));
    }

    #[test]
    fn json_round_trip() {
        let m = ComplexMatrix::from_rows(2, vec![c(1., 0.5), c(2., 0.), c(-3., 1.), c(0., -4.)]).unwrap();
        let back = ComplexMatrix::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ComplexMatrix::from_rows(1, vec![c(f64::NAN, 0.)]).is_err());
    }

    #[test]
    fn trace_product_matches_matmul() {
        let a = ComplexMatrix::from_fn(3, |r, k| c(r as f64 + 1.0, k as f64 - 1.0));
        let b = ComplexMatrix::from_fn(3, |r, k| c((r * k) as f64, 0.5));
        let direct = a.matmul(&b).trace().re;
        assert!((a.trace_product_real(&b) - direct).abs() < 1e-12);
    }
}
