//! Random quantum objects: Haar states and unitaries, Ginibre mixed states, Gaussian Hermitian matrices.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64};
use super::types::{DensityMatrix, HermitianMatrix, Projector};

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random unit vector in C^d.
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn haar_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::pure(&haar_vector(dim, rng))
}

/// Haar-random unitary: Gram–Schmidt on Ginibre columns (QR with positive diagonal R).
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-10 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_fn(dim, |r, c| cols[c][r])
}

/// Ginibre mixed state G G† / Tr with G of shape d × rank.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g: Vec<Vec<C64>> = (0..rank).map(|_| (0..dim).map(|_| complex_gaussian(rng)).collect()).collect();
    let m = ComplexMatrix::from_fn(dim, |r, c| g.iter().map(|col| col[r] * col[c].conj()).sum());
    let tr = m.trace().re;
    DensityMatrix::from_trusted(m.scale_real(1.0 / tr).hermitian_part())
}

/// Uniformly random rank-`rank` projector.
pub fn random_projector<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Projector {
    let u = haar_unitary(dim, rng);
    let mut m = ComplexMatrix::zeros(dim);
    for k in 0..rank {
        let col = u.column(k);
        m = &m + &ComplexMatrix::outer(&col, &col);
    }
    Projector::from_trusted(m.hermitian_part())
}

/// Gaussian Hermitian matrix with the given entry scale; the bound is its exact norm.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> HermitianMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    let h = g.hermitian_part().scale_real(scale);
    HermitianMatrix::tight(h).expect("hermitian part is Hermitian")
}

/// Random diagonal probability vector (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = StreamRng::new(3, 0);
        for d in [1, 2, 4, 7] {
            let u = haar_unitary(d, &mut rng);
            let i = u.adjoint().matmul(&u);
            assert!((&i - &ComplexMatrix::identity(d)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = StreamRng::new(4, 0);
        for d in [2, 3, 4] {
            for r in 1..=d {
                let rho = random_density(d, r, &mut rng);
                assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
            }
            let p = random_projector(d, 1, &mut rng);
            assert!(Projector::new(p.matrix().clone()).is_ok());
        }
    }
}
