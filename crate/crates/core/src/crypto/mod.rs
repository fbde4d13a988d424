//! Interface contracts for the cryptographic primitives the separation tasks
//! are built from, each with a desk-scale backend.
//!
//! | primitive | backend |
//! |---|---|
//! | strongly unforgeable signatures | Ed25519 (strict verification) over nonce-carrying tokens |
//! | zk-SNARK for "k distinct signatures" | witness-checking registry oracle |
//! | identity-based FHE | per-identity ChaCha20-Poly1305 keys plus an evaluation oracle |
//! | IVC | keyed hash-chain commitments plus a registry |
//! | non-parallelizing language | SHA-256 hash chain with a step counter |
//!
//! Byte layouts use [`codec`]: big-endian `u32` length prefixes in front of
//! every field, fields in declaration order.

pub mod codec;
pub mod fhe;
pub mod ivc;
pub mod npl;
pub mod sig;
pub mod snark;

use sha2::{Digest as _, Sha256};

pub type Digest = [u8; 32];

/// SHA-256 over the concatenation of `parts`.
pub fn sha256(parts: &[&[u8]]) -> Digest {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

pub(crate) fn random_bytes<const N: usize>(rng: &mut impl rand::RngCore) -> [u8; N] {
    let mut out = [0u8; N];
    rng.fill_bytes(&mut out);
    out
}
