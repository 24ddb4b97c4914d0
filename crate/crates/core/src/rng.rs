//! Deterministic random streams.
//!
//! Every random draw in the crate goes through [`RngStream`], which wraps
//! ChaCha8 (`rand_chacha::ChaCha8Rng`). ChaCha is a counter-based cipher
//! generator whose output for a given key is fixed by its reference
//! definition, so a `(seed, stream_id)` pair reproduces the same sequence on
//! every platform and build. The stream id is fed to ChaCha's native 64-bit
//! stream selector, which gives independent sequences for the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives a nested stream, e.g. per-permutation streams inside a
    /// per-simulation stream. The child key mixes both parent fields so that
    /// children of different parents do not collide.
    pub fn substream(&self, id: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5EED)));
        RngStream::new(key, id)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
