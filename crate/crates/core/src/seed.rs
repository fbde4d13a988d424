//! Seed derivation. Every source of randomness in a trial is a ChaCha20
//! stream keyed by a 64-bit seed derived from the master seed by hashing.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type TrialRng = ChaCha20Rng;

fn hash_to_u64(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u32).to_be_bytes());
        hasher.update(part);
    }
    let out = hasher.finalize();
    u64::from_be_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

/// Counter-mode sub-seed for trial `index` of an experiment.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    hash_to_u64(&[b"trial", &master.to_be_bytes(), &index.to_be_bytes()])
}

/// Sub-seed for a named stream inside a trial (one per party, one for the
/// instance, ...). Streams with different labels are independent.
pub fn labeled_seed(seed: u64, label: &str) -> u64 {
    hash_to_u64(&[b"stream", &seed.to_be_bytes(), label.as_bytes()])
}

pub fn rng_for(seed: u64, label: &str) -> TrialRng {
    TrialRng::seed_from_u64(labeled_seed(seed, label))
}
