//! Seed handling.
//!
//! Every stochastic operation takes an explicit 64-bit seed. Child streams
//! (per permutation replicate, per simulation repetition, per tree) are
//! derived from a parent seed and an index with a SplitMix64 finalizer, so a
//! result depends only on `(seed, index)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed of child stream `index` from `parent`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    mix(mix(parent.wrapping_add(GOLDEN)) ^ index.wrapping_add(1).wrapping_mul(GOLDEN))
}

/// Derive a seed for a named purpose, so that two consumers of the same
/// parent seed do not share a stream.
pub fn tagged_seed(parent: u64, tag: &str) -> u64 {
    tag.bytes()
        .fold(mix(parent ^ 0x5851_f42d_4c95_7f2d), |acc, b| {
            mix(acc ^ u64::from(b))
        })
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn child_rng(parent: u64, index: u64) -> Rng {
    rng_from_seed(child_seed(parent, index))
}
