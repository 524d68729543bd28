//! Seed derivation.
//!
//! All randomness in a run descends from one master seed. Sub-seeds are
//! derived by folding a purpose tag and indices through SplitMix64, so a
//! client's RNG stream depends only on `(master, purpose, round, client)`
//! and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep derived streams independent of each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ModelInit = 1,
    Sharding = 2,
    AttackerPlacement = 3,
    LabelFlip = 4,
    Selection = 5,
    ClientTraining = 6,
    Synthetic = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from `master`, a stream tag and a path of indices.
pub fn derive(master: u64, stream: Stream, path: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(stream as u64));
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

/// The RNG used everywhere in the simulator.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
