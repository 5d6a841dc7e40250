//! Deterministic seed derivation and counter-based uniform draws.
//!
//! Every stochastic component derives its randomness from a master seed plus
//! stable integer keys (subject index, replicate index, tree index, ...).
//! Results are therefore independent of thread scheduling: a unit of work is
//! seeded by what it is, not by when it runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates consecutive keys.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a key.
#[inline]
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    mix64(seed ^ mix64(key))
}

/// Derives a child seed from a parent seed and two keys.
#[inline]
pub fn derive_seed2(seed: u64, key1: u64, key2: u64) -> u64 {
    derive_seed(derive_seed(seed, key1), key2)
}

/// Stream RNG for a derived seed. ChaCha8 is stable across platforms and
/// library versions, which the byte-identical-rerun contract depends on.
pub fn stream_rng(seed: u64, key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, key))
}

/// Counter-based uniform in [0, 1): a pure function of (seed, key1, key2).
///
/// Used for per-(subject, node) draws in simulation so that counterfactual
/// arms share randomness positionally and skipped draws shift nothing.
#[inline]
pub fn uniform_at(seed: u64, key1: u64, key2: u64) -> f64 {
    let bits = mix64(derive_seed2(seed, key1, key2));
    // 53 high bits -> [0, 1)
    (bits >> 11) as f64 * (1.0 / 9007199254740992.0)
}
