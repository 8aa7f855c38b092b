//! Exact dense simulation on the full `dⁿ`-dimensional space.
//!
//! For an event built from site projectors `Πᵢ`, rotate each site into an
//! eigenbasis of its `Πᵢ`. There every `Eₜ` is diagonal, `B` is the diagonal
//! `b_J = c_{t(J)}`, and `√B`, `√(1−B)` act entrywise:
//! `ρ'_{JK} ↦ ρ'_{JK}·√(b_J b_K)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;

use super::{AcceptKind, GentleEvent, MeasurementOutcome, ProductState, SimConfig, SimError, SiteProjectors};
use crate::draws::bernoulli;
use crate::pbnoise::MIN_CONDITIONING_MASS;
use crate::qcore::{eigh, ComplexMatrix, DensityMatrix, C64};
use crate::sum::compensated_sum;

#[derive(Debug)]
pub(super) struct DenseState {
    n: usize,
    dim: usize,
    rho: ComplexMatrix,
}

/// Per-site eigenbases of the projectors and the accepting columns of each.
struct SiteFrame {
    bases: Vec<ComplexMatrix>,
    masks: Vec<Vec<bool>>,
}

impl DenseState {
    pub(super) fn new(state: &ProductState, cfg: &SimConfig) -> Result<Self, SimError> {
        let rho = state.dense_matrix(cfg)?;
        Ok(Self { n: state.n() as usize, dim: state.dim(), rho: rho.matrix().clone() })
    }

    pub(super) fn state(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.rho.clone())
    }

    fn frame(&self, projs: &SiteProjectors) -> Result<SiteFrame, SimError> {
        let mut bases = Vec::with_capacity(self.n);
        let mut masks = Vec::with_capacity(self.n);
        for (p, count) in projs.runs() {
            let e = eigh(p.matrix())?;
            let mask: Vec<bool> = e.values.iter().map(|&v| v > 0.5).collect();
            for _ in 0..*count {
                bases.push(e.vectors.clone());
                masks.push(mask.clone());
            }
        }
        Ok(SiteFrame { bases, masks })
    }

    /// `t(J)` for every basis string `J` of the rotated frame.
    fn accept_counts(&self, frame: &SiteFrame) -> Vec<u64> {
        let total = self.rho.dim();
        let mut out = vec![0u64; total];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut rest = j;
            let mut t = 0;
            for site in (0..self.n).rev() {
                let digit = rest % self.dim;
                rest /= self.dim;
                t += frame.masks[site][digit] as u64;
            }
            *slot = t;
        }
        out
    }

    /// `U†ρU` with `U = ⊗ᵢ Uᵢ`.
    fn to_frame(&self, frame: &SiteFrame) -> ComplexMatrix {
        let mut m = self.rho.clone();
        for (site, u) in frame.bases.iter().enumerate() {
            apply_site(&mut m, self.n, self.dim, site, &u.adjoint(), Side::Left);
            apply_site(&mut m, self.n, self.dim, site, u, Side::Right);
        }
        m
    }

    fn back_from_frame(&self, mut m: ComplexMatrix, frame: &SiteFrame) -> ComplexMatrix {
        for (site, u) in frame.bases.iter().enumerate() {
            apply_site(&mut m, self.n, self.dim, site, u, Side::Left);
            apply_site(&mut m, self.n, self.dim, site, &u.adjoint(), Side::Right);
        }
        m
    }

    pub(super) fn expect_event(&self, ev: &GentleEvent) -> Result<f64, SimError> {
        let frame = self.frame(ev.projectors())?;
        let rotated = self.to_frame(&frame);
        let counts = self.accept_counts(&frame);
        let diag = rotated.diagonal_real();
        let p = compensated_sum(counts.iter().zip(&diag).map(|(&t, &w)| ev.coefficient(t) * w));
        Ok(p.clamp(0.0, 1.0))
    }

    pub(super) fn post_select(&mut self, ev: &GentleEvent, accepted: bool) -> Result<f64, SimError> {
        let frame = self.frame(ev.projectors())?;
        let rotated = self.to_frame(&frame);
        let counts = self.accept_counts(&frame);
        let weights: Vec<f64> = counts.iter().map(|&t| ev.branch_coefficient(t, accepted)).collect();
        let diag = rotated.diagonal_real();
        let mass = compensated_sum(weights.iter().zip(&diag).map(|(w, r)| w * r));
        if !(mass >= MIN_CONDITIONING_MASS) {
            return Err(SimError::Underflow { mass });
        }
        let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let d = rotated.dim();
        let updated = ComplexMatrix::from_fn(d, |r, c| rotated[(r, c)] * (roots[r] * roots[c] / mass));
        self.rho = self.back_from_frame(updated, &frame).hermitian_part();
        Ok(mass.min(1.0))
    }

    pub(super) fn measure_event<R: Rng + ?Sized>(
        &mut self,
        ev: &GentleEvent,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, SimError> {
        let p = self.expect_event(ev)?;
        let accepted = bernoulli(p, rng);
        self.post_select(ev, accepted)?;
        Ok(MeasurementOutcome { accepted, p_accept: p, kind: AcceptKind::Exact })
    }

    pub(super) fn measure_average<R: Rng + ?Sized>(
        &mut self,
        projs: &SiteProjectors,
        rng: &mut R,
    ) -> Result<u64, SimError> {
        let frame = self.frame(projs)?;
        let rotated = self.to_frame(&frame);
        let counts = self.accept_counts(&frame);
        let diag = rotated.diagonal_real();
        let total: f64 = diag.iter().map(|v| v.max(0.0)).sum();
        let mut u = rng.random::<f64>() * total;
        for (j, &w) in diag.iter().enumerate() {
            u -= w.max(0.0);
            if u < 0.0 {
                return Ok(counts[j]);
            }
        }
        Ok(*counts.last().expect("nonempty state"))
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// `M ← (1 ⊗ op ⊗ 1)·M` or `M ← M·(1 ⊗ op ⊗ 1)` with `op` on `site` (site 0 most significant).
fn apply_site(m: &mut ComplexMatrix, n: usize, d: usize, site: usize, op: &ComplexMatrix, side: Side) {
    let total = m.dim();
    let stride = d.pow((n - 1 - site) as u32);
    let zero = C64::new(0.0, 0.0);
    let mut buf = vec![zero; d];
    let mut out = vec![zero; d];
    for base in 0..total {
        if !(base / stride).is_multiple_of(d) {
            continue;
        }
        for other in 0..total {
            for b in 0..d {
                buf[b] = match side {
                    Side::Left => m[(base + b * stride, other)],
                    Side::Right => m[(other, base + b * stride)],
                };
            }
            for a in 0..d {
                let mut acc = zero;
                for b in 0..d {
                    acc += match side {
                        Side::Left => op[(a, b)] * buf[b],
                        Side::Right => buf[b] * op[(b, a)],
                    };
                }
                out[a] = acc;
            }
            for a in 0..d {
                match side {
                    Side::Left => m[(base + a * stride, other)] = out[a],
                    Side::Right => m[(other, base + a * stride)] = out[a],
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random::{haar_unitary, random_density};
    use crate::rng::StreamRng;

    #[test]
    fn site_application_matches_kron() {
        let mut rng = StreamRng::new(11, 0);
        let (n, d) = (3, 2);
        let rho = random_density(8, 8, &mut rng).matrix().clone();
        let u = haar_unitary(d, &mut rng);
        let id = ComplexMatrix::identity(d);
        let full = id.kron(&u).kron(&id);
        let mut left = rho.clone();
        apply_site(&mut left, n, d, 1, &u, Side::Left);
        assert!((&left - &full.matmul(&rho)).max_abs() < 1e-13);
        let mut right = rho.clone();
        apply_site(&mut right, n, d, 1, &u, Side::Right);
        assert!((&right - &rho.matmul(&full)).max_abs() < 1e-13);
    }
}
