//! Seed derivation and RNG construction.
//!
//! Every randomized operation owns a [`ChaCha8Rng`] built from an explicit
//! seed. Independent sub-streams (per class, per sample, per candidate, per
//! matrix pair) are derived by mixing the base seed with integer tags, so the
//! order in which sub-tasks run never changes their draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a cheap, well-distributed 64-bit mixer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive a sub-seed from a base seed and a list of integer tags.
///
/// Mixing is order-sensitive: `derive_seed(s, &[a, b])` and
/// `derive_seed(s, &[b, a])` differ unless `a == b`.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x7fb5_d329_728e_a185);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag));
    }
    state
}

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic RNG for a derived sub-stream.
pub fn rng_for(base: u64, tags: &[u64]) -> ChaCha8Rng {
    rng_from_seed(derive_seed(base, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn sub_streams_are_stable_and_distinct() {
        let a1 = rng_for(42, &[1, 2]).next_u64();
        let a2 = rng_for(42, &[1, 2]).next_u64();
        let b = rng_for(42, &[2, 1]).next_u64();
        let c = rng_for(43, &[1, 2]).next_u64();
        assert_eq!(a1, a2);
        assert_ne!(a1, b);
        assert_ne!(a1, c);
    }
}
