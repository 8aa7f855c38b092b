//! Bounded real-valued function families `g(x) = Σ a_k φ_k(x)` used to modulate
//! Hamiltonians. Each family declares a range bound `B` and a fat-shattering
//! dimension; the range bound is checked on a validation grid over the domain.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{check_params, sample_box, ConceptError, Label};
use crate::rng::StreamRng;

/// Points per domain axis in the range-bound validation grid.
const GRID_PER_AXIS: usize = 9;
/// Cap on validation grid size; higher-dimensional domains use fewer points per axis.
const GRID_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Feature {
    Constant,
    Coordinate(usize),
    /// `cos(2π f·x)`
    Cos(Vec<f64>),
    /// `sin(2π f·x)`
    Sin(Vec<f64>),
}

impl Feature {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let phase = |f: &[f64]| 2.0 * PI * f.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        match self {
            Feature::Constant => 1.0,
            Feature::Coordinate(i) => x.get(*i).copied().unwrap_or(0.0),
            Feature::Cos(f) => phase(f).cos(),
            Feature::Sin(f) => phase(f).sin(),
        }
    }

    /// `sup |φ|` over the box domain.
    pub fn sup(&self, domain: &[(f64, f64)]) -> f64 {
        match self {
            Feature::Coordinate(i) => domain.get(*i).map_or(0.0, |&(lo, hi)| lo.abs().max(hi.abs())),
            _ => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealFunctionFamily {
    features: Vec<Feature>,
    coeff_box: Vec<(f64, f64)>,
    domain: Vec<(f64, f64)>,
    range_bound: f64,
    fat_shattering: f64,
}

impl RealFunctionFamily {
    pub fn new(
        features: Vec<Feature>,
        coeff_box: Vec<(f64, f64)>,
        domain: Vec<(f64, f64)>,
        range_bound: f64,
        fat_shattering: f64,
    ) -> Result<Self, ConceptError> {
        if features.len() != coeff_box.len() {
            return Err(ConceptError::ParameterCount { expected: features.len(), got: coeff_box.len() });
        }
        if coeff_box.iter().chain(&domain).any(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(ConceptError::BadSpec("boxes need finite lo ≤ hi"));
        }
        if !(range_bound >= 0.0) || !(fat_shattering >= 0.0) {
            return Err(ConceptError::BadSpec("range bound and fat-shattering dimension must be nonnegative"));
        }
        let fam = Self { features, coeff_box, domain, range_bound, fat_shattering };
        let worst = fam.grid().iter().map(|x| fam.envelope(x)).fold(0.0f64, f64::max);
        if worst > range_bound + 1e-12 {
            return Err(ConceptError::RangeBound { value: worst, bound: range_bound });
        }
        Ok(fam)
    }

    /// Trigonometric polynomials of degree `harmonics` on `[0, 1]` with coefficients in
    /// `[−r, r]`, `r = bound / (2·harmonics + 1)`, so `|g| ≤ bound` everywhere.
    pub fn fourier(harmonics: usize, bound: f64) -> Result<Self, ConceptError> {
        let mut features = alloc::vec![Feature::Constant];
        for k in 1..=harmonics {
            features.push(Feature::Cos(alloc::vec![k as f64]));
            features.push(Feature::Sin(alloc::vec![k as f64]));
        }
        let r = bound / features.len() as f64;
        let coeff_box = alloc::vec![(-r, r); features.len()];
        Self::new(features, coeff_box, alloc::vec![(0.0, 1.0)], bound, (2 * harmonics + 1) as f64)
    }

    /// Linear functions `a + b·x` on `[0, 1]` with `|a|, |b| ≤ bound/2`.
    pub fn affine(bound: f64) -> Result<Self, ConceptError> {
        let h = bound / 2.0;
        Self::new(
            alloc::vec![Feature::Constant, Feature::Coordinate(0)],
            alloc::vec![(-h, h), (-h, h)],
            alloc::vec![(0.0, 1.0)],
            bound,
            2.0,
        )
    }

    /// The single constant function `value`.
    pub fn constant(value: f64) -> Result<Self, ConceptError> {
        Self::new(alloc::vec![Feature::Constant], alloc::vec![(value, value)], alloc::vec![], value.abs(), 0.0)
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn coeff_box(&self) -> &[(f64, f64)] {
        &self.coeff_box
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn range_bound(&self) -> f64 {
        self.range_bound
    }

    pub fn fat_shattering(&self) -> f64 {
        self.fat_shattering
    }

    pub fn param_count(&self) -> usize {
        self.features.len()
    }

    pub fn member(&self, coeffs: &[f64]) -> Result<RealFunction, ConceptError> {
        check_params(coeffs, &self.coeff_box)?;
        Ok(RealFunction { features: self.features.clone(), coeffs: coeffs.to_vec() })
    }

    pub fn sample(&self, rng: &mut StreamRng) -> RealFunction {
        RealFunction { features: self.features.clone(), coeffs: sample_box(&self.coeff_box, rng) }
    }

    /// `sup_x |g(x) − g'(x)|` when every coefficient differs by at most `radius`.
    pub fn sup_perturbation(&self, radius: f64) -> f64 {
        radius * self.features.iter().map(|f| f.sup(&self.domain)).sum::<f64>()
    }

    /// `Σ max|a_k|·|φ_k(x)|`, the largest admissible `|g(x)|`.
    fn envelope(&self, x: &[f64]) -> f64 {
        self.features.iter().zip(&self.coeff_box).map(|(f, &(lo, hi))| lo.abs().max(hi.abs()) * f.eval(x).abs()).sum()
    }

    fn grid(&self) -> Vec<Vec<f64>> {
        let dims = self.domain.len();
        if dims == 0 {
            return alloc::vec![Vec::new()];
        }
        let mut per_axis = GRID_PER_AXIS;
        while per_axis > 2 && per_axis.checked_pow(dims as u32).is_none_or(|t| t > GRID_CAP) {
            per_axis -= 1;
        }
        let total = per_axis.checked_pow(dims as u32).unwrap_or(GRID_CAP).min(GRID_CAP);
        (0..total)
            .map(|mut k| {
                self.domain
                    .iter()
                    .map(|&(lo, hi)| {
                        let j = k % per_axis;
                        k /= per_axis;
                        lo + (hi - lo) * j as f64 / (per_axis - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }
}

/// One member `g(x) = Σ a_k φ_k(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealFunction {
    features: Vec<Feature>,
    coeffs: Vec<f64>,
}

impl RealFunction {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval_coords(&self, x: &[f64]) -> f64 {
        self.features.iter().zip(&self.coeffs).map(|(f, a)| a * f.eval(x)).sum()
    }

    pub fn eval(&self, x: &Label) -> f64 {
        self.eval_coords(&x.coordinates())
    }
}
