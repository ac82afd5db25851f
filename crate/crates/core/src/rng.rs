//! Seeded random number generation.
//!
//! Every random consumer in the pipeline derives its own stream from a single
//! master seed plus a fixed domain-separation tag, so that adding or removing
//! one consumer never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the tag bytes; stable across platforms and releases.
fn fnv1a(tag: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in tag.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive a sub-seed for one named consumer of the master seed.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    splitmix64(master ^ fnv1a(tag))
}

/// Deterministic generator for a raw seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic generator for one domain-separated consumer.
pub fn tagged_rng(master: u64, tag: &str) -> ChaCha8Rng {
    seeded_rng(derive_seed(master, tag))
}
