//! Product states and sequential gentle measurements on them.
//!
//! Two backends share one interface:
//!
//! - **Dense** keeps the full `dⁿ × dⁿ` density matrix and applies the
//!   √-convention update exactly. It is the ground truth for small `n`.
//! - **Commuting** handles states and projectors that are all diagonal in the
//!   computational basis. The quantum state is then a classical distribution over
//!   basis strings, which is simulated exactly by sampling a hidden configuration
//!   at the level of per-run category counts, so `n` can be in the billions.
//!
//! States and projector lists are run-length encoded ([`Runs`]): a block of data
//! with a handful of distinct labels costs memory per distinct label, not per site.

mod commuting;
mod dense;
mod runs;

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pbnoise::{ExponentialNoise, PbError};
use crate::qcore::{ComplexMatrix, DensityMatrix, LinalgError, Projector};

pub use commuting::{commuting_evolved_state, ParticleEstimate};
pub use runs::{common_refinement, Cell, Runs};

use commuting::CommutingState;
use dense::DenseState;

/// Off-diagonal magnitude tolerated by the commuting backend.
pub const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Pb(#[from] PbError),
    #[error("site dimension mismatch: expected {expected}, got {got}")]
    SiteDimension { expected: usize, got: usize },
    #[error("length mismatch: state has {state} sites, operator list has {operators}")]
    LengthMismatch { state: u64, operators: u64 },
    #[error("dense backend holds at most 2^{cap} amplitudes per side; n = {n}, d = {dim} is too large")]
    DenseCapExceeded { n: u64, dim: usize, cap: u32 },
    #[error("commuting backend needs diagonal operators (off-diagonal magnitude {defect:.3e})")]
    NotDiagonal { defect: f64 },
    #[error("noise rate λ = {0} must lie in (0, 1); use more sites or a larger noise scale")]
    BadLambda(f64),
    #[error("noise scale D must be positive and finite, got {0}")]
    BadNoiseScale(f64),
    #[error("threshold θ must be finite, got {0}")]
    BadTheta(f64),
    #[error("state handle was consumed by a destructive measurement")]
    Consumed,
    #[error("branch probability {mass:.3e} is below the normalization floor")]
    Underflow { mass: f64 },
    #[error("a product state needs at least one site")]
    Empty,
    #[error("selection asks for more sites than a run holds")]
    BadSelection,
    #[error("posterior sampling gave up after {attempts} proposals")]
    PosteriorSampling { attempts: u64 },
    #[error("operation needs the {0:?} backend")]
    WrongBackend(Backend),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Dense,
    Commuting,
}

/// Backend limits and particle-ensemble settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Dense states need `n·log₂ d ≤ dense_qubit_cap`.
    pub dense_qubit_cap: u32,
    /// Particles used for expectations on evolved commuting states.
    pub particles: usize,
    /// Residual resampling triggers when ESS drops below this fraction of the particles.
    pub resample_threshold: f64,
    /// Fresh commuting states up to this many sites get exact Poisson-binomial expectations.
    pub exact_pb_limit: u64,
    /// Proposal budget when a commuting posterior has to be sampled from scratch.
    pub posterior_attempts: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dense_qubit_cap: 14,
            particles: 100_000,
            resample_threshold: 0.5,
            exact_pb_limit: 5_000,
            posterior_attempts: 1_000_000,
        }
    }
}

/// Per-site projectors `Π₁ … Πₙ`, run-length encoded.
pub type SiteProjectors = Runs<Projector>;

/// `ρ₁ ⊗ … ⊗ ρₙ` with a backend tag.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    sites: Runs<DensityMatrix>,
    dim: usize,
    backend: Backend,
}

impl ProductState {
    pub fn new(sites: Runs<DensityMatrix>, backend: Backend, cfg: &SimConfig) -> Result<Self, SimError> {
        let dim = sites.values().next().ok_or(SimError::Empty)?.dim();
        for s in sites.values() {
            if s.dim() != dim {
                return Err(SimError::SiteDimension { expected: dim, got: s.dim() });
            }
        }
        match backend {
            Backend::Dense => check_dense_cap(sites.len(), dim, cfg.dense_qubit_cap)?,
            Backend::Commuting => {
                for s in sites.values() {
                    require_diagonal(s.matrix())?;
                }
            }
        }
        Ok(Self { sites, dim, backend })
    }

    pub fn from_sites(sites: Vec<DensityMatrix>, backend: Backend, cfg: &SimConfig) -> Result<Self, SimError> {
        Self::new(Runs::from_sites(sites), backend, cfg)
    }

    pub fn n(&self) -> u64 {
        self.sites.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn sites(&self) -> &Runs<DensityMatrix> {
        &self.sites
    }

    /// Sub-state picking `count` sites from run `index` for each pair.
    pub fn select(&self, selection: &[(usize, u64)]) -> Result<Self, SimError> {
        let sites = self.sites.select(selection).ok_or(SimError::BadSelection)?;
        if sites.is_empty() {
            return Err(SimError::Empty);
        }
        Ok(Self { sites, dim: self.dim, backend: self.backend })
    }

    /// `Tr[ρᵢΠᵢ]` per cell of the common refinement of sites and projectors.
    pub fn acceptance_probabilities(&self, projs: &SiteProjectors) -> Result<Runs<f64>, SimError> {
        self.check_projectors(projs)?;
        let cells = common_refinement(self.n(), self.sites.ends().chain(projs.ends()));
        let si = self.sites.locate(&cells);
        let pi = projs.locate(&cells);
        let mut runs = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            let p = self.sites.runs()[si[k]].0.probability(&projs.runs()[pi[k]].0)?;
            runs.push((p.clamp(0.0, 1.0), cell.len));
        }
        Ok(Runs::from_runs(runs))
    }

    /// The full `dⁿ × dⁿ` matrix (site 0 is the most significant factor).
    pub fn dense_matrix(&self, cfg: &SimConfig) -> Result<DensityMatrix, SimError> {
        check_dense_cap(self.n(), self.dim, cfg.dense_qubit_cap)?;
        let sites = self.sites.expand();
        let mut acc = sites[0].clone();
        for s in &sites[1..] {
            acc = acc.tensor(s);
        }
        Ok(acc)
    }

    pub(crate) fn check_projectors(&self, projs: &SiteProjectors) -> Result<(), SimError> {
        if projs.len() != self.n() {
            return Err(SimError::LengthMismatch { state: self.n(), operators: projs.len() });
        }
        for p in projs.values() {
            if p.dim() != self.dim {
                return Err(SimError::SiteDimension { expected: self.dim, got: p.dim() });
            }
            if self.backend == Backend::Commuting {
                require_diagonal(p.matrix())?;
            }
        }
        Ok(())
    }
}

fn check_dense_cap(n: u64, dim: usize, cap: u32) -> Result<(), SimError> {
    let bits = n as f64 * (dim as f64).log2();
    if bits > cap as f64 + 1e-9 {
        return Err(SimError::DenseCapExceeded { n, dim, cap });
    }
    Ok(())
}

fn require_diagonal(m: &ComplexMatrix) -> Result<(), SimError> {
    let defect = m.off_diagonal_max();
    if defect > DIAGONAL_TOL {
        return Err(SimError::NotDiagonal { defect });
    }
    Ok(())
}

/// The smoothed threshold event `B = Σₜ cₜ Eₜ`, `cₜ = Pr[X > θn − t]` with `X ~ Exp(λ)`,
/// where `Eₜ` projects onto exactly `t` accepting sites.
#[derive(Clone, Debug, PartialEq)]
pub struct GentleEvent {
    projectors: SiteProjectors,
    theta: f64,
    noise: ExponentialNoise,
}

impl GentleEvent {
    /// `theta` may fall outside [0, 1]: search thresholds like `θ − ε` go negative,
    /// and then the event always accepts.
    pub fn new(projectors: SiteProjectors, theta: f64, lambda: f64) -> Result<Self, SimError> {
        if !theta.is_finite() {
            return Err(SimError::BadTheta(theta));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(SimError::BadLambda(lambda));
        }
        if projectors.is_empty() {
            return Err(SimError::Empty);
        }
        Ok(Self { projectors, theta, noise: ExponentialNoise::new(lambda)? })
    }

    pub fn projectors(&self) -> &SiteProjectors {
        &self.projectors
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.noise.lambda()
    }

    pub fn noise(&self) -> &ExponentialNoise {
        &self.noise
    }

    pub fn n(&self) -> u64 {
        self.projectors.len()
    }

    /// `θn`, the count threshold before noise.
    pub fn count_threshold(&self) -> f64 {
        self.theta * self.n() as f64
    }

    /// Acceptance probability given exactly `t` accepting sites.
    pub fn coefficient(&self, t: u64) -> f64 {
        self.noise.survival(self.count_threshold() - t as f64)
    }

    /// `1 − coefficient(t)`, computed without cancellation.
    pub fn reject_coefficient(&self, t: u64) -> f64 {
        self.noise.cdf(self.count_threshold() - t as f64)
    }

    /// Branch weight for `t` accepting sites.
    pub fn branch_coefficient(&self, t: u64, accepted: bool) -> f64 {
        if accepted {
            self.coefficient(t)
        } else {
            self.reject_coefficient(t)
        }
    }
}

/// Gentle event with noise rate `λ = 1/(D√n)`.
pub fn build_gentle_event(projectors: SiteProjectors, theta: f64, noise_scale: f64) -> Result<GentleEvent, SimError> {
    if !(noise_scale > 0.0 && noise_scale.is_finite()) {
        return Err(SimError::BadNoiseScale(noise_scale));
    }
    let n = projectors.len() as f64;
    GentleEvent::new(projectors, theta, 1.0 / (noise_scale * n.sqrt()))
}

/// How `p_accept` in a [`MeasurementOutcome`] should be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcceptKind {
    /// `Tr[Bρ]` for the state before the measurement.
    Exact,
    /// Acceptance probability given the sampled hidden configuration; averaging it
    /// over configurations gives `Tr[Bρ]`.
    GivenConfiguration,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub accepted: bool,
    pub p_accept: f64,
    pub kind: AcceptKind,
}

/// An expectation with its Monte-Carlo standard error (zero when exact).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    pub std_error: f64,
}

impl Expectation {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }
}

/// A state that measurements act on in place.
///
/// Starts as a product state; gentle measurements turn it into the √-convention
/// post-measurement state of the realized branch. A destructive average
/// measurement consumes it.
#[derive(Debug)]
pub struct StateHandle {
    repr: Repr,
    n: u64,
    dim: usize,
    cfg: SimConfig,
    consumed: bool,
    measurements: usize,
}

#[derive(Debug)]
enum Repr {
    Dense(DenseState),
    Commuting(CommutingState),
}

impl StateHandle {
    pub fn new(state: ProductState, cfg: &SimConfig) -> Result<Self, SimError> {
        let (n, dim) = (state.n(), state.dim());
        let repr = match state.backend {
            Backend::Dense => Repr::Dense(DenseState::new(&state, cfg)?),
            Backend::Commuting => Repr::Commuting(CommutingState::new(&state)),
        };
        Ok(Self { repr, n, dim, cfg: cfg.clone(), consumed: false, measurements: 0 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> Backend {
        match self.repr {
            Repr::Dense(_) => Backend::Dense,
            Repr::Commuting(_) => Backend::Commuting,
        }
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// No measurement has touched the state yet.
    pub fn is_fresh(&self) -> bool {
        self.measurements == 0
    }

    fn check(&self, projs: &SiteProjectors) -> Result<(), SimError> {
        if self.consumed {
            return Err(SimError::Consumed);
        }
        if projs.len() != self.n {
            return Err(SimError::LengthMismatch { state: self.n, operators: projs.len() });
        }
        for p in projs.values() {
            if p.dim() != self.dim {
                return Err(SimError::SiteDimension { expected: self.dim, got: p.dim() });
            }
            if matches!(self.repr, Repr::Commuting(_)) {
                require_diagonal(p.matrix())?;
            }
        }
        Ok(())
    }

    /// `Tr[Bρ]` for the current state. Exact on dense states and on small fresh
    /// commuting states, otherwise a particle estimate.
    pub fn expect_event<R: Rng + ?Sized>(&self, ev: &GentleEvent, rng: &mut R) -> Result<Expectation, SimError> {
        self.check(ev.projectors())?;
        match &self.repr {
            Repr::Dense(s) => Ok(Expectation::exact(s.expect_event(ev)?)),
            Repr::Commuting(s) => s.expect_event(ev, &self.cfg, rng),
        }
    }

    /// Measures `{B, 1 − B}` and moves to the post-measurement state of the outcome.
    pub fn measure_event<R: Rng + ?Sized>(
        &mut self,
        ev: &GentleEvent,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, SimError> {
        self.check(ev.projectors())?;
        self.measurements += 1;
        match &mut self.repr {
            Repr::Dense(s) => s.measure_event(ev, rng),
            Repr::Commuting(s) => s.measure_event(ev, &self.cfg, rng),
        }
    }

    /// Forces the given branch and returns its probability.
    ///
    /// Dense only: this is an oracle for checking the sampling paths.
    pub fn post_select(&mut self, ev: &GentleEvent, accepted: bool) -> Result<f64, SimError> {
        self.check(ev.projectors())?;
        self.measurements += 1;
        match &mut self.repr {
            Repr::Dense(s) => s.post_select(ev, accepted),
            Repr::Commuting(_) => Err(SimError::WrongBackend(Backend::Dense)),
        }
    }

    /// Measures `Π̄ = Σᵢ Πᵢ` (each site projectively) and returns the count of
    /// accepting sites. Destroys the state.
    pub fn measure_average<R: Rng + ?Sized>(&mut self, projs: &SiteProjectors, rng: &mut R) -> Result<u64, SimError> {
        self.check(projs)?;
        self.consumed = true;
        self.measurements += 1;
        match &mut self.repr {
            Repr::Dense(s) => s.measure_average(projs, rng),
            Repr::Commuting(s) => s.measure_average(projs, &self.cfg, rng),
        }
    }

    /// The current dense state; `None` on the commuting backend.
    pub fn dense_state(&self) -> Option<DensityMatrix> {
        match &self.repr {
            Repr::Dense(s) => Some(s.state()),
            Repr::Commuting(_) => None,
        }
    }
}

#[cfg(test)]
mod tests;
