//! Seed derivation for independent, schedule-free random substreams.
//!
//! Every stochastic step (fold shuffles, k-means seeding, per-label
//! synthesis, SGD ordering) draws from a ChaCha stream keyed by the global
//! seed plus a path of tags, so the output of one job never depends on how
//! many numbers another job consumed or on the order jobs ran in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags that keep substreams of different subsystems apart.
pub mod tag {
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const KMEANS: u64 = 0x4b4d_4e53;
    pub const SYNTH: u64 = 0x5359_4e54;
    pub const TRAIN: u64 = 0x5452_4e20;
    pub const TOY: u64 = 0x544f_5920;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `seed` with `path` into a single 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
