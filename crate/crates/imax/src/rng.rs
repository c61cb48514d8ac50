//! Seed derivation.
//!
//! All randomness in a run flows from a single root seed. Sub-streams are
//! derived by hashing the root together with a domain tag and an index, so
//! adding workers or reordering evaluation never perturbs unrelated streams.
//!
//! Split scheme: `root -> {env(k), init, rollout(k), eval, layout}` where `k`
//! is the worker index.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Deterministic RNG used throughout the crate.
pub type Rng = ChaCha12Rng;

/// SplitMix64 finalizer; good avalanche, stable across platforms.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fold_tag(tag: &str) -> u64 {
    // FNV-1a over the tag bytes.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in tag.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `root` for the given domain tag and index.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(fold_tag(tag)) ^ splitmix64(index.wrapping_mul(0x9e37_79b9)))
}

/// Builds a seeded stream for the given domain tag and index.
pub fn stream(root: u64, tag: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(root, tag, index))
}
