//! Counter-based seeded randomness: `(seed, stream, step)` fixes every draw.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// ChaCha20 keyed by `seed`, with an independent keystream per `stream`.
#[derive(Clone, Debug)]
pub struct StreamRng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

/// Where a generator stands; enough to resume it exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngPosition {
    pub seed: u64,
    pub stream: u64,
    pub step: u128,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn at(pos: RngPosition) -> Self {
        let mut r = Self::new(pos.seed, pos.stream);
        r.inner.set_word_pos(pos.step);
        r
    }

    pub fn position(&self) -> RngPosition {
        RngPosition { seed: self.seed, stream: self.stream, step: self.inner.get_word_pos() }
    }

    /// Same seed, another stream; used to hand independent trials their own generator.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
