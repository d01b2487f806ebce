//! Seeded random streams.
//!
//! Every stochastic routine in the crate takes an explicit seed and derives
//! independent ChaCha streams from it, so replicate `r` always sees the same
//! draws no matter which thread runs it or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` of the key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A child seed, distinct for each `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // stream 0 is reserved for the parent itself
    stream_rng(seed, index.wrapping_add(1)).next_u64()
}
