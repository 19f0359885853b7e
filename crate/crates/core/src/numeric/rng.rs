//! Deterministic, addressable random number streams.
//!
//! A stream is identified by a 256-bit ChaCha key built from
//! `(seed, stream_id, purpose, substream)`. Distinct keys give independent
//! streams, and no stream has to be advanced to reach another, so Monte
//! Carlo repetitions and bootstrap draws can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Well-known `purpose` tags.
pub mod purpose {
    pub const SIMULATION: u64 = 0;
    pub const BOOTSTRAP: u64 = 1;
    pub const PAIRS: u64 = 2;

    /// Wild recursive bootstrap around a VAR(`p`), so that bootstrap DGPs
    /// with different lag orders draw independent multipliers.
    pub const fn bootstrap_for_lag(p: usize) -> u64 {
        0x100 + p as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    pub purpose: u64,
    pub substream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            seed,
            stream_id,
            purpose: 0,
            substream: 0,
        }
    }

    /// Child stream for the `index`-th unit of work (e.g. one bootstrap draw).
    pub fn substream(&self, index: u64) -> Self {
        Self {
            substream: index,
            ..*self
        }
    }

    pub fn with_purpose(&self, purpose: u64) -> Self {
        Self { purpose, ..*self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (chunk, word) in key
            .chunks_exact_mut(8)
            .zip([self.seed, self.stream_id, self.purpose, self.substream])
        {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Stream for `(root_seed, repetition, purpose)`; the mapping is injective.
pub fn derive_stream(root_seed: u64, repetition: u64, purpose: u64) -> RngStream {
    RngStream::new(root_seed, repetition).with_purpose(purpose)
}

/// Convenience: one standard normal draw.
#[inline]
pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
