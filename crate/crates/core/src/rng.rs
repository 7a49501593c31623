//! Deterministic seed derivation for per-point sampling streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche, stable across platforms.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapses `(seed, tags...)` into one stream key. Used so each source
/// point gets an independent, scheduling-invariant RNG stream.
pub(crate) fn mix(seed: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(seed);
    for &t in tags {
        state = splitmix64(state ^ t);
    }
    state
}

pub(crate) fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, tags))
}
