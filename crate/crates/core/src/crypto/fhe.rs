//! Identity-based homomorphic encryption, simulated.
//!
//! Each identity gets a ChaCha20-Poly1305 key derived from the master
//! secret; the identity is bound as associated data, so decrypting under a
//! mismatched identity key fails authentication. Encryption and evaluation
//! go through a public oracle that holds the master secret privately:
//! evaluation decrypts, applies a registered circuit and re-encrypts under
//! the same identity. Nothing on the public side can reach the master
//! secret; only [`fhe_keygen`] turns it into identity keys.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::RngCore;
use thiserror::Error;

use super::codec::{Reader, Writer};
use super::{random_bytes, sha256, Digest};

pub const IDENTITY_LEN: usize = 16;
const NONCE_LEN: usize = 12;

/// Plaintext produced by evaluation on an undecryptable input or an unknown
/// circuit. Never a well-formed payload.
pub const EVAL_FAILED: &[u8] = b"\xFEeval-failed";

pub type Identity = [u8; IDENTITY_LEN];

/// A pure function over plaintext bytes.
pub type Circuit = Arc<dyn Fn(&[u8]) -> Vec<u8> + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FheError {
    #[error("decryption failed")]
    DecryptionFailed,
}

#[derive(Clone, PartialEq, Eq)]
pub struct MasterSecret(pub [u8; 32]);

impl std::fmt::Debug for MasterSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MasterSecret(..)")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct IdentityKey {
    pub identity: Identity,
    pub key: [u8; 32],
}

impl IdentityKey {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new().field(&self.identity).field(&self.key).finish()
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Option<Self> {
        Some(Self {
            identity: r.fixed()?,
            key: r.fixed()?,
        })
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = Reader::new(bytes);
        let k = Self::read(&mut r)?;
        r.is_exhausted().then_some(k)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ciphertext {
    pub identity: Identity,
    /// Nonce followed by the AEAD output.
    pub body: Vec<u8>,
}

impl Ciphertext {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new().field(&self.identity).field(&self.body).finish()
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Option<Self> {
        Some(Self {
            identity: r.fixed()?,
            body: r.field()?.to_vec(),
        })
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = Reader::new(bytes);
        let c = Self::read(&mut r)?;
        r.is_exhausted().then_some(c)
    }

    /// Encoded length for a plaintext of `plaintext_len` bytes.
    pub const fn encoded_len(plaintext_len: usize) -> usize {
        4 + IDENTITY_LEN + 4 + NONCE_LEN + plaintext_len + 16
    }
}

/// Content-addressed circuit name: the hash of the registrant's description,
/// so handles do not depend on registration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircuitHandle(pub Digest);

struct FheOracle {
    msk: MasterSecret,
    circuits: RwLock<HashMap<CircuitHandle, Circuit>>,
}

/// Public parameters: a setup tag and a handle to the encryption/evaluation
/// oracle.
#[derive(Clone)]
pub struct FhePublic {
    pub params: [u8; 32],
    oracle: Arc<FheOracle>,
}

impl std::fmt::Debug for FhePublic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FhePublic")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl FhePublic {
    /// Rebuild the public side around an existing master secret.
    pub fn with_secret(params: [u8; 32], msk: &MasterSecret) -> Self {
        Self {
            params,
            oracle: Arc::new(FheOracle {
                msk: msk.clone(),
                circuits: RwLock::default(),
            }),
        }
    }

    pub fn circuit_count(&self) -> usize {
        self.oracle.circuits.read().expect("circuit registry poisoned").len()
    }
}

pub fn fhe_setup<R: RngCore>(rng: &mut R) -> (FhePublic, MasterSecret) {
    let msk = MasterSecret(random_bytes(rng));
    let params = random_bytes(rng);
    (FhePublic::with_secret(params, &msk), msk)
}

pub fn fhe_keygen(msk: &MasterSecret, identity: &Identity) -> IdentityKey {
    IdentityKey {
        identity: *identity,
        key: sha256(&[b"ibfhe-identity-key", &msk.0, identity]),
    }
}

fn seal(key: &IdentityKey, nonce: [u8; NONCE_LEN], m: &[u8]) -> Ciphertext {
    let cipher = ChaCha20Poly1305::new(Key::from_slice(&key.key));
    let sealed = cipher
        .encrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: m,
                aad: &key.identity,
            },
        )
        .expect("in-memory encryption cannot fail");
    let mut body = nonce.to_vec();
    body.extend_from_slice(&sealed);
    Ciphertext {
        identity: key.identity,
        body,
    }
}

pub fn fhe_encrypt<R: RngCore>(pp: &FhePublic, identity: &Identity, m: &[u8], rng: &mut R) -> Ciphertext {
    let key = fhe_keygen(&pp.oracle.msk, identity);
    seal(&key, random_bytes(rng), m)
}

pub fn fhe_decrypt(key: &IdentityKey, c: &Ciphertext) -> Result<Vec<u8>, FheError> {
    if key.identity != c.identity || c.body.len() < NONCE_LEN {
        return Err(FheError::DecryptionFailed);
    }
    let (nonce, sealed) = c.body.split_at(NONCE_LEN);
    ChaCha20Poly1305::new(Key::from_slice(&key.key))
        .decrypt(
            Nonce::from_slice(nonce),
            Payload {
                msg: sealed,
                aad: &key.identity,
            },
        )
        .map_err(|_| FheError::DecryptionFailed)
}

/// Register `circuit` under the name derived from `description`. The
/// description must determine the circuit's behaviour; registering the same
/// description twice replaces the first circuit.
pub fn fhe_register(pp: &FhePublic, description: &[u8], circuit: Circuit) -> CircuitHandle {
    let handle = CircuitHandle(sha256(&[b"ibfhe-circuit", description]));
    pp.oracle
        .circuits
        .write()
        .expect("circuit registry poisoned")
        .insert(handle, circuit);
    handle
}

/// `Eval(C, c)`: a ciphertext under `c`'s identity of `C(m)`, or of
/// [`EVAL_FAILED`] if `c` does not decrypt. Deterministic in its inputs.
pub fn fhe_eval(pp: &FhePublic, circuit: CircuitHandle, c: &Ciphertext) -> Ciphertext {
    let key = fhe_keygen(&pp.oracle.msk, &c.identity);
    let circuit_fn = pp
        .oracle
        .circuits
        .read()
        .expect("circuit registry poisoned")
        .get(&circuit)
        .cloned();
    let out = match (fhe_decrypt(&key, c), circuit_fn) {
        (Ok(m), Some(f)) => f(&m),
        _ => EVAL_FAILED.to_vec(),
    };
    let digest = sha256(&[b"ibfhe-eval-nonce", &key.key, &circuit.0, &c.body]);
    let nonce: [u8; NONCE_LEN] = digest[..NONCE_LEN].try_into().expect("digest is long enough");
    seal(&key, nonce, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use rand::Rng;

    #[test]
    fn round_trip_and_identity_mismatch() {
        let mut rng = rng_for(1, "fhe");
        let (pp, msk) = fhe_setup(&mut rng);
        let id: Identity = rng.gen();
        let other: Identity = rng.gen();
        let m: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
        let c = fhe_encrypt(&pp, &id, &m, &mut rng);
        assert_eq!(fhe_decrypt(&fhe_keygen(&msk, &id), &c).unwrap(), m);
        assert_eq!(
            fhe_decrypt(&fhe_keygen(&msk, &other), &c),
            Err(FheError::DecryptionFailed)
        );
        // Relabelling the ciphertext does not help either.
        let relabelled = Ciphertext {
            identity: other,
            body: c.body.clone(),
        };
        assert!(fhe_decrypt(&fhe_keygen(&msk, &other), &relabelled).is_err());
        assert_eq!(c.encode().len(), Ciphertext::encoded_len(64));
        assert_eq!(Ciphertext::decode(&c.encode()), Some(c));
    }

    #[test]
    fn encryption_is_randomized() {
        let mut rng = rng_for(2, "fhe");
        let (pp, _) = fhe_setup(&mut rng);
        let id = [7u8; IDENTITY_LEN];
        let a = fhe_encrypt(&pp, &id, b"same", &mut rng);
        let b = fhe_encrypt(&pp, &id, b"same", &mut rng);
        assert_ne!(a.body, b.body);
    }

    #[test]
    fn eval_applies_registered_circuit() {
        let mut rng = rng_for(3, "fhe");
        let (pp, msk) = fhe_setup(&mut rng);
        let id = [1u8; IDENTITY_LEN];
        let key = fhe_keygen(&msk, &id);
        let ident = fhe_register(&pp, b"identity", Arc::new(|m: &[u8]| m.to_vec()));
        let rev = fhe_register(&pp, b"reverse", Arc::new(|m: &[u8]| m.iter().rev().copied().collect()));
        let c = fhe_encrypt(&pp, &id, b"abc", &mut rng);
        assert_eq!(fhe_decrypt(&key, &fhe_eval(&pp, ident, &c)).unwrap(), b"abc");
        assert_eq!(fhe_decrypt(&key, &fhe_eval(&pp, rev, &c)).unwrap(), b"cba");
    }

    #[test]
    fn eval_on_garbage_yields_failure_marker() {
        let mut rng = rng_for(4, "fhe");
        let (pp, msk) = fhe_setup(&mut rng);
        let id = [2u8; IDENTITY_LEN];
        let h = fhe_register(&pp, b"identity", Arc::new(|m: &[u8]| m.to_vec()));
        let garbage = Ciphertext {
            identity: id,
            body: vec![0u8; 40],
        };
        let out = fhe_eval(&pp, h, &garbage);
        assert_eq!(fhe_decrypt(&fhe_keygen(&msk, &id), &out).unwrap(), EVAL_FAILED);
    }
}
