//! Classical-quantum sources: a label distribution together with the channel
//! `x ↦ ρ(x)` that prepares the quantum part of each sample.

use alloc::vec::Vec;
use core::fmt::Debug;

use rand::Rng;

use super::{sample_box, ConceptError, ConceptKind, ConceptRef, Label};
use crate::qcore::DensityMatrix;
use crate::rng::StreamRng;

pub trait CqSource: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn sample_label(&self, rng: &mut StreamRng) -> Label;
    fn channel(&self, x: &Label) -> Result<DensityMatrix, ConceptError>;

    /// Finite label distribution, when there is one.
    fn support(&self) -> Option<&[(Label, f64)]> {
        None
    }

    /// Draws a label as an index into [`CqSource::support`]; consumes randomness
    /// exactly like [`CqSource::sample_label`].
    fn sample_support_index(&self, _rng: &mut StreamRng) -> Option<usize> {
        None
    }

    /// `Some(true)` when some concept in the target class has zero risk on this source.
    fn realizable(&self) -> Option<bool> {
        None
    }
}

fn check_channel(channel: &ConceptRef) -> Result<(), ConceptError> {
    if channel.kind() != ConceptKind::State {
        return Err(ConceptError::KindMismatch { expected: ConceptKind::State, got: channel.kind() });
    }
    Ok(())
}

/// Labels from a finite weighted list.
#[derive(Clone, Debug)]
pub struct FiniteSource {
    support: Vec<(Label, f64)>,
    cumulative: Vec<f64>,
    channel: ConceptRef,
    realizable: Option<bool>,
}

impl FiniteSource {
    /// Weights are normalized; they must be nonnegative with a positive sum.
    pub fn new(
        support: Vec<(Label, f64)>,
        channel: ConceptRef,
        realizable: Option<bool>,
    ) -> Result<Self, ConceptError> {
        check_channel(&channel)?;
        let total: f64 = support.iter().map(|(_, w)| *w).sum();
        if support.is_empty() || support.iter().any(|(_, w)| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(ConceptError::BadSpec("label weights must be nonnegative with a positive sum"));
        }
        let support: Vec<(Label, f64)> = support.into_iter().map(|(x, w)| (x, w / total)).collect();
        let cumulative = support
            .iter()
            .scan(0.0, |acc, (_, w)| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self { support, cumulative, channel, realizable })
    }

    pub fn uniform(labels: Vec<Label>, channel: ConceptRef, realizable: Option<bool>) -> Result<Self, ConceptError> {
        Self::new(labels.into_iter().map(|x| (x, 1.0)).collect(), channel, realizable)
    }

    fn draw_index(&self, rng: &mut StreamRng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.support.len() - 1)
    }
}

impl CqSource for FiniteSource {
    fn dim(&self) -> usize {
        self.channel.dim()
    }

    fn sample_label(&self, rng: &mut StreamRng) -> Label {
        let k = self.draw_index(rng);
        self.support[k].0.clone()
    }

    fn sample_support_index(&self, rng: &mut StreamRng) -> Option<usize> {
        Some(self.draw_index(rng))
    }

    fn channel(&self, x: &Label) -> Result<DensityMatrix, ConceptError> {
        self.channel.eval_state(x)
    }

    fn support(&self) -> Option<&[(Label, f64)]> {
        Some(&self.support)
    }

    fn realizable(&self) -> Option<bool> {
        self.realizable
    }
}

/// Real labels uniform on a box.
#[derive(Clone, Debug)]
pub struct UniformBoxSource {
    domain: Vec<(f64, f64)>,
    channel: ConceptRef,
    realizable: Option<bool>,
}

impl UniformBoxSource {
    pub fn new(domain: Vec<(f64, f64)>, channel: ConceptRef, realizable: Option<bool>) -> Result<Self, ConceptError> {
        check_channel(&channel)?;
        if domain.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return Err(ConceptError::BadSpec("box needs lo ≤ hi"));
        }
        Ok(Self { domain, channel, realizable })
    }
}

impl CqSource for UniformBoxSource {
    fn dim(&self) -> usize {
        self.channel.dim()
    }

    fn sample_label(&self, rng: &mut StreamRng) -> Label {
        Label::Real(sample_box(&self.domain, rng))
    }

    fn channel(&self, x: &Label) -> Result<DensityMatrix, ConceptError> {
        self.channel.eval_state(x)
    }

    fn realizable(&self) -> Option<bool> {
        self.realizable
    }
}

/// Mixes every prepared state with the maximally mixed state: `(1−p)ρ(x) + p·I/d`.
///
/// Turns a realizable source into an agnostic one.
#[derive(Clone, Debug)]
pub struct DepolarizedSource<S> {
    inner: S,
    p: f64,
}

impl<S: CqSource> DepolarizedSource<S> {
    pub fn new(inner: S, p: f64) -> Result<Self, ConceptError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ConceptError::BadSpec("depolarizing weight must lie in [0, 1]"));
        }
        Ok(Self { inner, p })
    }
}

impl<S: CqSource> CqSource for DepolarizedSource<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn sample_label(&self, rng: &mut StreamRng) -> Label {
        self.inner.sample_label(rng)
    }

    fn channel(&self, x: &Label) -> Result<DensityMatrix, ConceptError> {
        Ok(self.inner.channel(x)?.depolarize(self.p))
    }

    fn support(&self) -> Option<&[(Label, f64)]> {
        self.inner.support()
    }

    fn sample_support_index(&self, rng: &mut StreamRng) -> Option<usize> {
        self.inner.sample_support_index(rng)
    }

    fn realizable(&self) -> Option<bool> {
        if self.p == 0.0 {
            self.inner.realizable()
        } else {
            None
        }
    }
}
