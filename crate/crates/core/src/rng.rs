//! Seed derivation.
//!
//! Every random stream in the pipeline is a `ChaCha8Rng` seeded from the
//! top-level seed by [`derive_seed`]: the component label is hashed with
//! 64-bit FNV-1a, combined with the root seed and the index, and passed
//! through two rounds of the SplitMix64 finalizer. The derivation is stable
//! across platforms and compiler versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the stream `(label, index)` under `root`.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let a = splitmix64(root ^ fnv1a(label));
    splitmix64(a ^ splitmix64(index))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(root: u64, label: &str, index: u64) -> Rng {
    rng_from_seed(derive_seed(root, label, index))
}
