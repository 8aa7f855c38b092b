//! Exact simulation for simultaneously diagonal states and projectors.
//!
//! With everything diagonal, `ρ` is a distribution over basis strings `J` and a
//! gentle event accepts with probability `c_{t(J)}`. After a sequence of
//! outcomes the state is that distribution reweighted by the branch
//! coefficients. The handle keeps the outcome history as the source of truth and
//! caches one exact posterior sample of `J`: per run of sites, the counts of each
//! basis value. Sites inside a run are exchangeable, so splitting a run when a
//! later projector list changes inside it is a multivariate hypergeometric draw.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow it once a dependency links std
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::runs::{common_refinement, Cell, Runs};
use super::{
    AcceptKind, Backend, Expectation, GentleEvent, MeasurementOutcome, ProductState, Repr, SimConfig, SimError,
    SiteProjectors, StateHandle,
};
use crate::draws::{bernoulli, multinomial, multivariate_hypergeometric};
use crate::pbnoise::{pb_pmf, smoothed_tail};

#[derive(Debug)]
pub(super) struct CommutingState {
    populations: Runs<Vec<f64>>,
    history: Vec<(GentleEvent, bool)>,
    hidden: Option<Configuration>,
}

/// One sampled basis string, stored as per-piece counts of each basis value.
#[derive(Clone, Debug)]
struct Configuration {
    pieces: Vec<Piece>,
}

#[derive(Clone, Debug)]
struct Piece {
    start: u64,
    len: u64,
    counts: Vec<u64>,
}

type Masks = Runs<Vec<bool>>;

fn masks_of(projs: &SiteProjectors) -> Masks {
    projs.map(|p| p.diagonal_mask())
}

impl Configuration {
    fn sample_prior<R: Rng + ?Sized>(populations: &Runs<Vec<f64>>, rng: &mut R) -> Self {
        let pieces = populations
            .spans()
            .map(|(start, len, pops)| Piece { start, len, counts: multinomial(len, pops, rng) })
            .collect();
        Self { pieces }
    }

    /// Splits pieces so that none straddles a cut.
    fn refine<R: Rng + ?Sized>(&mut self, cuts: impl IntoIterator<Item = u64>, rng: &mut R) {
        let mut cuts: Vec<u64> = cuts.into_iter().collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut out = Vec::with_capacity(self.pieces.len() + cuts.len());
        let mut ci = 0;
        for mut piece in self.pieces.drain(..) {
            while ci < cuts.len() && cuts[ci] <= piece.start {
                ci += 1;
            }
            while ci < cuts.len() && cuts[ci] < piece.start + piece.len {
                let left_len = cuts[ci] - piece.start;
                let left = multivariate_hypergeometric(&piece.counts, left_len, rng);
                let right: Vec<u64> = piece.counts.iter().zip(&left).map(|(a, b)| a - b).collect();
                out.push(Piece { start: piece.start, len: left_len, counts: left });
                piece = Piece { start: cuts[ci], len: piece.len - left_len, counts: right };
                ci += 1;
            }
            out.push(piece);
        }
        self.pieces = out;
    }

    /// Accepting sites under the masks; the configuration must already be refined at their run ends.
    fn accept_count(&self, masks: &Masks) -> u64 {
        let cells: Vec<Cell> = self.pieces.iter().map(|p| Cell { start: p.start, len: p.len }).collect();
        let idx = masks.locate(&cells);
        self.pieces
            .iter()
            .zip(idx)
            .map(|(p, k)| {
                let mask = &masks.runs()[k].0;
                p.counts.iter().zip(mask).filter(|(_, &m)| m).map(|(c, _)| c).sum::<u64>()
            })
            .sum()
    }

    fn observe<R: Rng + ?Sized>(&mut self, masks: &Masks, rng: &mut R) -> u64 {
        self.refine(masks.ends(), rng);
        self.accept_count(masks)
    }
}

impl CommutingState {
    pub(super) fn new(state: &ProductState) -> Self {
        Self { populations: state.sites().map(|s| s.populations()), history: Vec::new(), hidden: None }
    }

    fn n(&self) -> u64 {
        self.populations.len()
    }

    /// The cached configuration, drawing it from the posterior of the history if needed.
    fn hidden<R: Rng + ?Sized>(&mut self, cfg: &SimConfig, rng: &mut R) -> Result<&mut Configuration, SimError> {
        if self.hidden.is_none() {
            let cfg_sample = sample_posterior(&self.populations, &self.history, cfg.posterior_attempts, rng)?;
            self.hidden = Some(cfg_sample);
        }
        Ok(self.hidden.as_mut().expect("just filled"))
    }

    pub(super) fn expect_event<R: Rng + ?Sized>(
        &self,
        ev: &GentleEvent,
        cfg: &SimConfig,
        rng: &mut R,
    ) -> Result<Expectation, SimError> {
        if self.history.is_empty() && self.n() <= cfg.exact_pb_limit {
            let probs = self.site_probabilities(ev.projectors());
            let pb = pb_pmf(&probs)?;
            return Ok(Expectation::exact(smoothed_tail(&pb, ev.noise(), ev.count_threshold())));
        }
        let est = particle_expectation(&self.populations, &self.history, ev, cfg, rng)?;
        Ok(Expectation { value: est.mean, std_error: est.std_error })
    }

    fn site_probabilities(&self, projs: &SiteProjectors) -> Vec<f64> {
        let masks = masks_of(projs);
        let cells = common_refinement(self.n(), self.populations.ends().chain(masks.ends()));
        let si = self.populations.locate(&cells);
        let mi = masks.locate(&cells);
        let mut out = Vec::new();
        for (k, cell) in cells.iter().enumerate() {
            let pops = &self.populations.runs()[si[k]].0;
            let mask = &masks.runs()[mi[k]].0;
            let p: f64 = pops.iter().zip(mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
            out.extend(core::iter::repeat_n(p.clamp(0.0, 1.0), cell.len as usize));
        }
        out
    }

    pub(super) fn measure_event<R: Rng + ?Sized>(
        &mut self,
        ev: &GentleEvent,
        cfg: &SimConfig,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, SimError> {
        let masks = masks_of(ev.projectors());
        let t = self.hidden(cfg, rng)?.observe(&masks, rng);
        let p = ev.coefficient(t);
        let accepted = bernoulli(p, rng);
        self.history.push((ev.clone(), accepted));
        Ok(MeasurementOutcome { accepted, p_accept: p, kind: AcceptKind::GivenConfiguration })
    }

    pub(super) fn measure_average<R: Rng + ?Sized>(
        &mut self,
        projs: &SiteProjectors,
        cfg: &SimConfig,
        rng: &mut R,
    ) -> Result<u64, SimError> {
        let masks = masks_of(projs);
        Ok(self.hidden(cfg, rng)?.observe(&masks, rng))
    }

    fn particle_estimate<R: Rng + ?Sized>(
        &self,
        ev: &GentleEvent,
        cfg: &SimConfig,
        rng: &mut R,
    ) -> Result<ParticleEstimate, SimError> {
        particle_expectation(&self.populations, &self.history, ev, cfg, rng)
    }
}

/// Exact posterior draw by rejection from the product prior.
fn sample_posterior<R: Rng + ?Sized>(
    populations: &Runs<Vec<f64>>,
    history: &[(GentleEvent, bool)],
    attempts: u64,
    rng: &mut R,
) -> Result<Configuration, SimError> {
    let masks: Vec<Masks> = history.iter().map(|(ev, _)| masks_of(ev.projectors())).collect();
    for _ in 0..attempts.max(1) {
        let mut conf = Configuration::sample_prior(populations, rng);
        let mut keep = true;
        for ((ev, accepted), m) in history.iter().zip(&masks) {
            let t = conf.observe(m, rng);
            if !bernoulli(ev.branch_coefficient(t, *accepted), rng) {
                keep = false;
                break;
            }
        }
        if keep {
            return Ok(conf);
        }
    }
    Err(SimError::PosteriorSampling { attempts })
}

/// Weighted particle estimate of an event's acceptance probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Effective sample size of the final weights.
    pub ess: f64,
    pub resamples: usize,
    pub particles: usize,
}

/// Sequential importance sampling over the outcome history.
///
/// Particles are drawn from the product prior at the resolution of every
/// projector list involved, weighted by each recorded branch coefficient in
/// turn, and resampled (residual scheme) whenever the effective sample size
/// falls below the configured fraction.
fn particle_expectation<R: Rng + ?Sized>(
    populations: &Runs<Vec<f64>>,
    history: &[(GentleEvent, bool)],
    query: &GentleEvent,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<ParticleEstimate, SimError> {
    let n = populations.len();
    let events: Vec<&GentleEvent> = history.iter().map(|(e, _)| e).chain(core::iter::once(query)).collect();
    let masks: Vec<Masks> = events.iter().map(|e| masks_of(e.projectors())).collect();
    let cells = common_refinement(n, populations.ends().chain(masks.iter().flat_map(|m| m.ends())));
    let pop_idx = populations.locate(&cells);
    let mask_idx: Vec<Vec<usize>> = masks.iter().map(|m| m.locate(&cells)).collect();

    let np = cfg.particles.max(1);
    let ne = events.len();
    // counts[particle][event] = accepting sites t_e for that particle
    let mut counts = vec![0u64; np * ne];
    for p in 0..np {
        let row = &mut counts[p * ne..(p + 1) * ne];
        for (k, cell) in cells.iter().enumerate() {
            let draw = multinomial(cell.len, &populations.runs()[pop_idx[k]].0, rng);
            for e in 0..ne {
                let mask = &masks[e].runs()[mask_idx[e][k]].0;
                row[e] += draw.iter().zip(mask).filter(|(_, &m)| m).map(|(c, _)| c).sum::<u64>();
            }
        }
    }

    let mut log_w = vec![0.0f64; np];
    let mut resamples = 0;
    for (e, (ev, accepted)) in history.iter().enumerate() {
        for p in 0..np {
            log_w[p] += ev.branch_coefficient(counts[p * ne + e], *accepted).ln();
        }
        let w = normalized(&log_w)?;
        if ess(&w) < cfg.resample_threshold * np as f64 {
            let picks = residual_resample(&w, rng);
            let mut next = Vec::with_capacity(counts.len());
            for &i in &picks {
                next.extend_from_slice(&counts[i * ne..(i + 1) * ne]);
            }
            counts = next;
            log_w.iter_mut().for_each(|l| *l = 0.0);
            resamples += 1;
        }
    }

    let w = normalized(&log_w)?;
    let f: Vec<f64> = (0..np).map(|p| query.coefficient(counts[p * ne + ne - 1])).collect();
    let mean: f64 = w.iter().zip(&f).map(|(w, f)| w * f).sum();
    let var: f64 = w.iter().zip(&f).map(|(w, f)| w * w * (f - mean) * (f - mean)).sum();
    Ok(ParticleEstimate { mean: mean.clamp(0.0, 1.0), std_error: var.sqrt(), ess: ess(&w), resamples, particles: np })
}

fn normalized(log_w: &[f64]) -> Result<Vec<f64>, SimError> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(SimError::Underflow { mass: 0.0 });
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / s).collect())
}

fn ess(w: &[f64]) -> f64 {
    1.0 / w.iter().map(|x| x * x).sum::<f64>()
}

/// Residual resampling: `⌊N wᵢ⌋` copies of each particle, the rest drawn from the residual weights.
fn residual_resample<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> Vec<usize> {
    let np = w.len();
    let mut picks = Vec::with_capacity(np);
    let mut residual = Vec::with_capacity(np);
    for (i, &wi) in w.iter().enumerate() {
        let copies = (wi * np as f64).floor();
        for _ in 0..copies as usize {
            picks.push(i);
        }
        residual.push(wi * np as f64 - copies);
    }
    let rest = np - picks.len();
    if rest > 0 {
        let mut cdf = Vec::with_capacity(np);
        let mut acc = 0.0;
        for r in &residual {
            acc += r;
            cdf.push(acc);
        }
        for _ in 0..rest {
            let u = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|&c| c <= u).min(np - 1);
            picks.push(i);
        }
    }
    picks
}

/// Commuting state after the given events were each observed to reject.
pub fn commuting_evolved_state(
    state: &ProductState,
    rejected_events: &[GentleEvent],
    cfg: &SimConfig,
) -> Result<StateHandle, SimError> {
    if state.backend() != Backend::Commuting {
        return Err(SimError::WrongBackend(Backend::Commuting));
    }
    let mut handle = StateHandle::new(state.clone(), cfg)?;
    for ev in rejected_events {
        handle.check(ev.projectors())?;
    }
    if let Repr::Commuting(s) = &mut handle.repr {
        s.history = rejected_events.iter().map(|e| (e.clone(), false)).collect();
    }
    handle.measurements = rejected_events.len();
    Ok(handle)
}

impl StateHandle {
    /// Particle estimate of `Tr[Bρ]` with its diagnostics; commuting backend only.
    pub fn particle_estimate<R: Rng + ?Sized>(
        &self,
        ev: &GentleEvent,
        rng: &mut R,
    ) -> Result<ParticleEstimate, SimError> {
        self.check(ev.projectors())?;
        match &self.repr {
            Repr::Commuting(s) => s.particle_estimate(ev, &self.cfg, rng),
            Repr::Dense(_) => Err(SimError::WrongBackend(Backend::Commuting)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn refinement_preserves_counts() {
        let mut rng = StreamRng::new(5, 0);
        let pops = Runs::from_runs(vec![(vec![0.3, 0.7], 1000), (vec![0.9, 0.1], 500)]);
        let mut conf = Configuration::sample_prior(&pops, &mut rng);
        let before: Vec<u64> = conf.pieces.iter().map(|p| p.counts.iter().sum()).collect();
        assert_eq!(before, vec![1000, 500]);
        conf.refine([10, 999, 1000, 1200], &mut rng);
        let lens: Vec<u64> = conf.pieces.iter().map(|p| p.len).collect();
        assert_eq!(lens, vec![10, 989, 1, 200, 300]);
        for p in &conf.pieces {
            assert_eq!(p.counts.iter().sum::<u64>(), p.len);
        }
    }

    #[test]
    fn residual_resampling_keeps_size() {
        let mut rng = StreamRng::new(6, 0);
        let w = [0.5, 0.25, 0.125, 0.125];
        let picks = residual_resample(&w, &mut rng);
        assert_eq!(picks.len(), 4);
        assert_eq!(picks.iter().filter(|&&i| i == 0).count(), 2);
    }
}
