//! Seeded, reproducible random streams shared by every stochastic component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StdRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th independent sub-stream of `base`.
#[inline]
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ index
}
