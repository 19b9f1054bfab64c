//! Named random streams derived from one base seed.
//!
//! Each consumer asks for a stream by `(label, index)`; the derived seed
//! depends only on the base seed and that name, so adding draws to one
//! component never shifts the numbers another component sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derives the seed for stream `label` number `index`.
pub fn derive(base: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ fnv1a(label)).wrapping_add(splitmix64(index)))
}

/// A seeded generator for stream `label` number `index`.
pub fn stream(base: u64, label: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(base, label, index))
}
