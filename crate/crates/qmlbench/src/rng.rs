//! Seed derivation for reproducible, schedule-independent parallel work.
//!
//! Every ensemble member (disorder configuration, kernel pair, shot stream)
//! gets its own RNG seeded purely from the experiment seed and the item's
//! index, so results do not depend on thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for combining seed material.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and up to two stream indices.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    mix(mix(seed ^ mix(a)) ^ mix(b.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Deterministic RNG for a derived stream.
pub fn stream_rng(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, a, b))
}
