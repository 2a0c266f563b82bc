//! Seeded, splittable random streams.
//!
//! Every randomized constructor in the crate draws from a [`Rng`], a thin
//! wrapper over ChaCha20 (`rand_chacha::ChaCha20Rng`). A stream is identified
//! by `(seed, stream)`: the 64-bit seed is expanded with
//! `ChaCha20Rng::seed_from_u64`, and the stream id selects one of the 2^64
//! independent ChaCha streams via `set_stream`. The algorithm is fixed, so
//! identical `(seed, stream)` pairs produce identical phase sequences on every
//! platform, and trials fanned out across threads each own a stream derived
//! from their index rather than sharing mutable state.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Deterministic random stream keyed by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent stream of the same seed, e.g. one per trial.
    pub fn split(&self, stream: u64) -> Rng {
        Rng::with_stream(self.seed, stream)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform index in `0..bound`.
    pub fn next_index(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }

    pub(crate) fn inner_mut(&mut self) -> &mut ChaCha20Rng {
        &mut self.inner
    }
}

/// SplitMix64 finalizer; derives child seeds for sweep cells and repeats.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
