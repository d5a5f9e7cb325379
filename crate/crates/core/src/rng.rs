//! Deterministic random streams.
//!
//! Every stochastic task draws from its own ChaCha8 stream whose seed is a
//! mix of `(master_seed, purpose tag, index)`. Streams never depend on the
//! order in which tasks are scheduled, so results are identical for any
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngStream = ChaCha8Rng;

/// Purpose tags used when deriving sub-streams.
pub mod tag {
    pub const SIMULATE: u64 = 0x5349_4d55;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const DENSITY: u64 = 0x4445_4e53;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a purpose tag and an index into a child seed.
///
/// `mix(s, t, i) = sm(sm(sm(s) ^ t) ^ i)` where `sm` is the SplitMix64
/// finalizer.
pub fn mix(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index)
}

pub fn stream(seed: u64, tag: u64, index: u64) -> RngStream {
    ChaCha8Rng::seed_from_u64(mix(seed, tag, index))
}
