//! The single random stream used by every sampler in the crate.
//!
//! `ChaCha8Rng` seeded through `SeedableRng::seed_from_u64`, so a 64-bit seed
//! fixes every draw on every platform. Replicate `r` of a batch uses seed
//! `base.wrapping_add(r)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn replicate_seed(base: u64, replicate: u64) -> u64 {
    base.wrapping_add(replicate)
}
