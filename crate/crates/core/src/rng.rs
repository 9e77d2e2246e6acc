//! Seeded random streams.
//!
//! Every stochastic step (tie-breaking in clustering, EM initialisation,
//! synthetic data) takes a `u64` seed and builds a [`ChaCha8Rng`] from it.
//! Independent streams for experiment trials are derived by hashing the
//! master seed together with labels identifying the trial, so a trial's
//! stream does not depend on which other trials run or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Identifies the generator and the derivation scheme. Bump when either
/// changes so recorded seeds are not silently reinterpreted.
pub const STREAM_VERSION: &str = "chacha8/sha256-v1";

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from a master seed and a path of labels.
pub fn derive_seed(master: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(STREAM_VERSION.as_bytes());
    hasher.update(master.to_le_bytes());
    for label in labels {
        // length prefix keeps ["ab","c"] distinct from ["a","bc"]
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_label_sensitive() {
        let a = derive_seed(7, &["drug", "A", "em", "0"]);
        assert_eq!(a, derive_seed(7, &["drug", "A", "em", "0"]));
        assert_ne!(a, derive_seed(7, &["drug", "A", "em", "1"]));
        assert_ne!(a, derive_seed(8, &["drug", "A", "em", "0"]));
        assert_ne!(derive_seed(1, &["ab", "c"]), derive_seed(1, &["a", "bc"]));
    }

    #[test]
    fn streams_replay() {
        let xs: Vec<u32> = stream(42).random_iter().take(8).collect();
        let ys: Vec<u32> = stream(42).random_iter().take(8).collect();
        assert_eq!(xs, ys);
    }
}
