//! Counter-based derivation of random streams.
//!
//! Every random decision in the crate draws from a stream identified by a
//! root seed plus a short path of integers, e.g. `(trial, phase, lane)`.
//! The stream seed is obtained by folding the path into the root with the
//! SplitMix64 finaliser, so a stream depends only on its identifier and never
//! on the order in which other streams were consumed. This is what makes
//! results identical across thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Phase identifiers used inside one sampled graph.
pub mod phase {
    pub const TYPES: u64 = 1;
    pub const EDGES: u64 = 2;
    pub const COUPLING: u64 = 3;
    pub const TRUNCATION: u64 = 4;
    pub const CHOICE: u64 = 5;
    pub const NAIVE: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold `path` into `root`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(root), |acc, &c| {
        splitmix64(acc ^ splitmix64(c.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

pub fn stream(root: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, path))
}
