//! Seeded random streams.
//!
//! Every consumer gets its own ChaCha20 stream: the generator is keyed by
//! `seed_from_u64(master_seed)` and the consumer is selected with
//! `set_stream(tag)`. Streams never share keystream, so switching one
//! consumer on or off leaves the others untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator name recorded in every resolved config.
pub const RNG_ALGORITHM: &str = "chacha20:seed_from_u64(master_seed)+set_stream(tag)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Init = 1,
    EhviDraws = 2,
    RandomScores = 3,
    Synthetic = 4,
}

const FRESH_DRAWS_BIT: u64 = 1 << 63;

pub fn stream(master_seed: u64, tag: StreamTag) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(tag as u64);
    rng
}

/// Per-candidate stream for fresh EHVI draws. Depends only on the round and
/// the pool index, so scoring order cannot change the draws.
pub fn candidate_stream(master_seed: u64, round: usize, candidate: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(FRESH_DRAWS_BIT | ((round as u64) << 32) | (candidate as u64 & 0xffff_ffff));
    rng
}
