//! Seeded randomness. Every random draw in the toolkit comes from a
//! ChaCha8 stream built here from a 64-bit user seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type FilterRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> FilterRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th item of a batch run under `seed`.
pub fn item_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}
