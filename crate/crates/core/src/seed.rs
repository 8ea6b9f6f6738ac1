//! Seed derivation for reproducible, order-independent randomness.
//!
//! Every random draw in the simulator comes from a `ChaCha8Rng` seeded by
//! mixing a master seed with the tags of the consuming stream (worker id,
//! round number, ...). Workers therefore get independent streams whose
//! contents do not depend on execution order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, one per independent consumer of randomness.
pub mod stream {
    pub const SYNTH: u64 = 0x01;
    pub const SPLIT: u64 = 0x02;
    pub const KMEANS: u64 = 0x03;
    pub const INIT: u64 = 0x04;
    pub const SHUFFLE: u64 = 0x05;
    pub const WORKER: u64 = 0x06;
    pub const PRETRAIN: u64 = 0x07;
    pub const OUTPUT_LAYER: u64 = 0x08;
    pub const DATASET: u64 = 0x09;
    pub const FEDERATION: u64 = 0x0a;
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a master seed and a sequence of stream tags into one 64-bit seed.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t));
    }
    s
}

/// Deterministic RNG for the stream identified by `(master, tags)`.
pub fn rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, tags))
}
