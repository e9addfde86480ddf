//! Keyed random streams.
//!
//! Every sampler draws from its own ChaCha stream selected by
//! `(seed, epoch, sampler)`, so a batch can be regenerated from those three
//! numbers alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum SamplerId {
    Domain = 1,
    Ball = 2,
    Interface = 3,
    Boundary = 4,
    Evaluation = 5,
    HitOrMiss = 6,
    Verification = 7,
}

pub fn keyed_rng(seed: u64, epoch: u64, sampler: SamplerId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((epoch << 8) | sampler as u64);
    rng
}
