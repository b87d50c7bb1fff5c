//! Seed splitting. Every random stream in the crate is a ChaCha8 generator
//! seeded from the master seed with `seed_from_u64` and then moved to a
//! numbered stream with `set_stream`, so replicate `k` of any campaign draws
//! from stream `k` regardless of scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child master seed for nested campaigns: the first word of stream `stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}
