//! Reproducible, splittable random streams.
//!
//! Every draw in the sampler comes from a [`RandomStream`], a ChaCha
//! generator keyed by `(seed, stream_id)`. The same key and call sequence
//! replays the same draws on any platform, and distinct stream ids give
//! statistically independent streams, so each chain (or worker) owns one
//! stream and runs without coordination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

/// Snapshot of a stream's position, sufficient to resume it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamState {
    pub seed: u64,
    pub stream_id: u64,
    pub word_pos: u128,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream {
            rng,
            seed,
            stream_id,
        }
    }

    /// A fresh stream with the same seed but a different id.
    pub fn substream(&self, stream_id: u64) -> Self {
        RandomStream::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn state(&self) -> StreamState {
        StreamState {
            seed: self.seed,
            stream_id: self.stream_id,
            word_pos: self.rng.get_word_pos(),
        }
    }

    pub fn restore(state: StreamState) -> Self {
        let mut s = RandomStream::new(state.seed, state.stream_id);
        s.rng.set_word_pos(state.word_pos);
        s
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw on `[lo, hi)`.
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Exp(1) draw.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
