//! Seeded randomness. Every random choice in the crate flows from a
//! [`ChaCha8Rng`] seeded explicitly; child streams are derived from a master
//! seed and a counter so parallel work stays reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for trial `index` under `master` (splitmix64 finalizer).
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn child(master: u64, index: u64) -> Rng {
    seeded(child_seed(master, index))
}

/// Seed derived from a string key, for candidates identified by content
/// rather than by position.
pub fn keyed_seed(master: u64, key: &str) -> u64 {
    // FNV-1a, then mixed with the master seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    child_seed(master, h)
}
