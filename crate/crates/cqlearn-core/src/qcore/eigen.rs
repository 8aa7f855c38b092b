//! Cyclic complex Jacobi eigensolver for Hermitian matrices.
//!
//! Every spectral operation in the crate (norms, square roots, exponentials,
//! spectral projectors) goes through [`eigh`].

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;

use super::matrix::{ComplexMatrix, C64};
use super::LinalgError;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching unit eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// V f(Λ) V† for a complex-valued spectral function.
    pub fn map(&self, mut f: impl FnMut(f64) -> C64) -> ComplexMatrix {
        let d = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(d, |r, c| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                if fv[k].re != 0.0 || fv[k].im != 0.0 {
                    acc += v[(r, k)] * fv[k] * v[(c, k)].conj();
                }
            }
            acc
        })
    }

    pub fn map_real(&self, mut f: impl FnMut(f64) -> f64) -> ComplexMatrix {
        self.map(|l| C64::new(f(l), 0.0))
    }
}

/// Diagonalizes the Hermitian part of `m`.
pub fn eigh(m: &ComplexMatrix) -> Result<Eigh, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let d = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(d);
    let scale = a.frobenius_norm();
    if scale == 0.0 || d == 1 {
        return Ok(sorted(a.diagonal_real(), v));
    }
    let target = (1e-17 * scale) * (1e-17 * scale);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|r| (0..d).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)].norm_sqr())
            .sum();
        if off <= target {
            return Ok(sorted(a.diagonal_real(), v));
        }
        for p in 0..d - 1 {
            for q in p + 1..d {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    Err(LinalgError::NoConvergence)
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let gamma = a[(p, q)];
    let g = gamma.norm();
    if g < 1e-300 {
        return;
    }
    let alpha = a[(p, p)].re;
    let beta = a[(q, q)].re;
    let phase = gamma / g; // e^{iφ}
    let tau = (beta - alpha) / (2.0 * g);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e_minus = phase.conj();
    let d = a.dim();

    // U = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on coordinates (p, q); A ← U† A U.
    for k in 0..d {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * e_minus * s;
        a[(k, q)] = akp * s + akq * e_minus * c;
    }
    for k in 0..d {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }
}

fn sorted(values: Vec<f64>, vectors: ComplexMatrix) -> Eigh {
    let d = values.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = ComplexMatrix::from_fn(d, |r, c| vectors[(r, order[c])]);
    Eigh { values: vals, vectors: vecs }
}

/// Singular values (descending) via the eigenvalues of M†M.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    let gram = m.adjoint().matmul(m);
    let mut s: Vec<f64> = eigh(&gram)?.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    s.reverse();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn herm(seed: u64, d: usize) -> ComplexMatrix {
        // Small deterministic LCG so this test does not depend on the RNG module.
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = ComplexMatrix::from_fn(d, |_, _| C64::new(next(), next()));
        m.hermitian_part()
    }

    #[test]
    fn reconstructs_random_hermitian() {
        for (seed, d) in [(1u64, 2usize), (2, 3), (3, 5), (4, 8), (5, 16)] {
            let h = herm(seed, d);
            let e = eigh(&h).unwrap();
            let back = e.map_real(|l| l);
            assert!((&back - &h).max_abs() < 1e-12, "d={d}");
            let vtv = e.vectors.adjoint().matmul(&e.vectors);
            assert!((&vtv - &ComplexMatrix::identity(d)).max_abs() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn diagonal_input_is_exact() {
        let m = ComplexMatrix::from_real_diagonal(&[3.0, -1.0, 2.0]);
        let e = eigh(&m).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_y_spectrum() {
        let y =
            ComplexMatrix::from_rows(2, vec![C64::new(0., 0.), C64::new(0., -1.), C64::new(0., 1.), C64::new(0., 0.)])
                .unwrap();
        let e = eigh(&y).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_values_of_rank_one() {
        let u = [C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let w = [C64::new(3.0, 0.0), C64::new(0.0, 4.0)];
        let s = singular_values(&ComplexMatrix::outer(&u, &w)).unwrap();
        assert!((s[0] - 5.0f64.sqrt() * 5.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-7);
    }
}
