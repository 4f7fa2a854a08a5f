//! Reproducible random streams.
//!
//! A stream is ChaCha8 keyed by a 64-bit seed with the ChaCha stream word set
//! to the stream id, so `(seed, stream_id)` fully determines the sequence on
//! every platform. Gaussian draws use the ziggurat sampler from `rand_distr`
//! over that generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RandomError {
    #[error("standard deviation must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("empty or inverted range [{0}, {1})")]
    BadRange(f64, f64),
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Normal draw with mean `mu` and standard deviation `sigma`.
    ///
    /// One standard normal is always consumed, so the stream position does
    /// not depend on `sigma`; `sigma == 0` returns `mu` exactly.
    pub fn gaussian(&mut self, mu: f64, sigma: f64) -> Result<f64, RandomError> {
        if sigma < 0.0 || sigma.is_nan() {
            return Err(RandomError::NegativeSigma(sigma));
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        if sigma == 0.0 {
            return Ok(mu);
        }
        Ok(mu + sigma * z)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64, RandomError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(RandomError::BadRange(lo, hi));
        }
        Ok(self.rng.random_range(lo..hi))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }
}

/// Mixes several words into one seed (splitmix64 finalizer chained over the
/// inputs). Used to derive per-run and per-mode seeds from a base seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
