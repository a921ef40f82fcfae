//! Seed derivation.
//!
//! Every stochastic operation takes an explicit seed. Independent streams
//! (data generation, parameter init, training negatives, evaluation
//! negatives) are split from one base seed with a SplitMix64 mix so that
//! changing one stream never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags used when splitting a base seed.
pub mod stream {
    pub const DATA: u64 = 0x01;
    pub const INIT: u64 = 0x02;
    pub const SAMPLING: u64 = 0x03;
    pub const EVAL: u64 = 0x04;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `stream` from `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Generator for child stream `stream` of `base`.
pub fn child(base: u64, stream: u64) -> Rng {
    seeded(derive_seed(base, stream))
}
