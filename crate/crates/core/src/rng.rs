//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a generator keyed by
//! `(seed, purpose, index)`. Two streams with different keys are independent,
//! and a stream never depends on which other streams were consumed first, so
//! restarts and batch items produce the same numbers in any execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha20Rng;

/// Generator for the stream identified by `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(key)
}

/// A child seed, for handing a deterministic seed to a nested computation.
pub fn derive_seed(seed: u64, purpose: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, purpose, index).next_u64()
}
