//! Seed derivation for independent runs.
//!
//! Every run owns one ChaCha8 stream derived from `(master_seed, run_index)`.
//! Within a round the policy consumes its draws first, then the reward draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed. Independent of scheduling: a pure function of its inputs.
pub fn run_seed(master_seed: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ run_index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn run_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
