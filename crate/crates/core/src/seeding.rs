//! Deterministic seed derivation.
//!
//! Every random stream in a run is keyed by (master seed, purpose, a, b)
//! where `a`/`b` are context indices such as round and user. Randomness
//! never depends on scheduling, so runs are reproducible at any client
//! parallelism level.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub mod purpose {
    pub const MODEL_INIT: u64 = 1;
    pub const LOCAL_TRAIN: u64 = 2;
    pub const EVAL_NEGATIVES: u64 = 3;
    pub const PAIR_MASK: u64 = 4;
    pub const FAIRNESS_USER_NOISE: u64 = 5;
    pub const FAIRNESS_ROUND_NOISE: u64 = 6;
    pub const ATTACK_TRIAL: u64 = 7;
    pub const GROUP_SCHEME: u64 = 8;
}

/// ChaCha20 generator keyed by the four context words, little-endian.
pub fn derive_rng(master: u64, purpose: u64, a: u64, b: u64) -> ChaCha20Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&purpose.to_le_bytes());
    seed[16..24].copy_from_slice(&a.to_le_bytes());
    seed[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha20Rng::from_seed(seed)
}
