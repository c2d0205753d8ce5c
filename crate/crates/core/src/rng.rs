//! Seeded random streams.
//!
//! Every randomized operation draws from a [`Stream`] derived from a user seed.
//! Independent sub-streams are keyed by integers, so parallel work can be
//! scheduled in any order without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Root stream for a seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sub-stream of `seed` identified by `keys`.
pub fn substream(seed: u64, keys: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, keys))
}

/// Mixes a seed with a key path (splitmix64 finalizer per step).
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    let mut h = mix(seed ^ 0x6a09_e667_f3bc_c908);
    for &k in keys {
        h = mix(h ^ mix(k.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
