//! Seeded randomness shared by every stochastic step (splits, folds, sampling).
//!
//! The generator is ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`; permutations use the Fisher-Yates shuffle of
//! `rand` 0.8 (`SliceRandom::shuffle`). Both are platform independent, so a
//! seed reproduces the same partition on every machine.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn shuffle<T>(items: &mut [T], rng: &mut Rng) {
    items.shuffle(rng);
}
