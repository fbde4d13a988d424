//! zk-SNARK for the statement "there exist `k` pairwise-distinct valid
//! signatures of 0", realized as a registry oracle.
//!
//! Proving checks the witness and registers a fresh uniform 16-byte token
//! under the statement digest; verification is registry membership. Since
//! the token is independent of the witness, proofs from different witnesses
//! are identically distributed, and since nothing reaches the registry
//! without a checked witness, soundness and extraction hold exactly.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, RwLock};

use rand::RngCore;
use thiserror::Error;

use super::codec::{Reader, Writer};
use super::sig::{sig_verify, SigPublicKey, SignatureToken};
use super::{random_bytes, sha256, Digest};

pub const PROOF_TOKEN_LEN: usize = 16;
pub const PROOF_ENCODED_LEN: usize = 4 + PROOF_TOKEN_LEN + 4 + 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnarkError {
    #[error("witness rejected: {0}")]
    WitnessRejected(&'static str),
    #[error("no witness registered for this proof")]
    NoWitness,
}

/// Machine `M_k` bound to one verification key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SigCountStatement {
    pub k: u64,
    pub vk_digest: Digest,
}

impl SigCountStatement {
    pub fn new(k: u64, pk: &SigPublicKey) -> Self {
        Self {
            k,
            vk_digest: pk.digest(),
        }
    }

    /// `SHA-256(k as big-endian u64 ∥ verification key digest)`.
    pub fn digest(&self) -> Digest {
        sha256(&[&self.k.to_be_bytes(), &self.vk_digest])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProofToken {
    pub token: [u8; PROOF_TOKEN_LEN],
    pub statement_digest: Digest,
}

impl ProofToken {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new().field(&self.token).field(&self.statement_digest).finish()
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = Reader::new(bytes);
        let p = Self::read(&mut r)?;
        r.is_exhausted().then_some(p)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Option<Self> {
        Some(Self {
            token: r.fixed()?,
            statement_digest: r.fixed()?,
        })
    }
}

/// Witnesses are stored as a prefix of a shared token list, so a table of
/// proofs over growing prefixes costs one list.
type Entries = HashMap<(Digest, [u8; PROOF_TOKEN_LEN]), (Arc<[SignatureToken]>, usize)>;

/// Public parameters: the shared registry plus an inert setup tag (the time
/// bound the proof system was set up for).
#[derive(Clone, Debug)]
pub struct SnarkParams {
    registry: Arc<RwLock<Entries>>,
    pub setup_tag: Vec<u8>,
}

impl SnarkParams {
    pub fn setup(setup_tag: Vec<u8>) -> Self {
        Self {
            registry: Arc::default(),
            setup_tag,
        }
    }

    pub fn len(&self) -> usize {
        self.registry.read().expect("registry poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registered entries with their witnesses, in a canonical order.
    pub fn snapshot(&self) -> Vec<(Digest, [u8; PROOF_TOKEN_LEN], Vec<SignatureToken>)> {
        let registry = self.registry.read().expect("registry poisoned");
        let mut out: Vec<_> = registry
            .iter()
            .map(|((d, t), (w, len))| (*d, *t, w[..*len].to_vec()))
            .collect();
        out.sort_by_key(|a| (a.0, a.1));
        out
    }

    /// Re-insert entries from [`SnarkParams::snapshot`]. Entries restored
    /// without a witness verify but cannot be extracted.
    pub fn restore(&self, entries: impl IntoIterator<Item = (Digest, [u8; PROOF_TOKEN_LEN], Vec<SignatureToken>)>) {
        let mut registry = self.registry.write().expect("registry poisoned");
        for (d, t, w) in entries {
            let len = w.len();
            registry.insert((d, t), (w.into(), len));
        }
    }
}

/// Check the witness for `M_k` and, on success, register a fresh proof.
pub fn snark_prove<R: RngCore>(
    params: &SnarkParams,
    pk: &SigPublicKey,
    stmt: &SigCountStatement,
    witness: &[SignatureToken],
    rng: &mut R,
) -> Result<ProofToken, SnarkError> {
    snark_prove_prefix(params, pk, stmt, &Arc::from(witness), rng)
}

/// As [`snark_prove`], with the first `stmt.k` entries of `tokens` as the
/// witness.
pub fn snark_prove_prefix<R: RngCore>(
    params: &SnarkParams,
    pk: &SigPublicKey,
    stmt: &SigCountStatement,
    tokens: &Arc<[SignatureToken]>,
    rng: &mut R,
) -> Result<ProofToken, SnarkError> {
    if stmt.k == 0 {
        return Err(SnarkError::WitnessRejected("k must be positive"));
    }
    if stmt.vk_digest != pk.digest() {
        return Err(SnarkError::WitnessRejected("statement bound to another key"));
    }
    let k = usize::try_from(stmt.k).map_err(|_| SnarkError::WitnessRejected("k too large"))?;
    if tokens.len() < k {
        return Err(SnarkError::WitnessRejected("fewer than k signatures"));
    }
    let witness = &tokens[..k];
    let mut seen = HashSet::with_capacity(k);
    for token in witness {
        if !seen.insert(token) {
            return Err(SnarkError::WitnessRejected("duplicate signature"));
        }
        if !sig_verify(pk, token) {
            return Err(SnarkError::WitnessRejected("invalid signature"));
        }
    }
    let proof = ProofToken {
        token: random_bytes(rng),
        statement_digest: stmt.digest(),
    };
    params
        .registry
        .write()
        .expect("registry poisoned")
        .insert((proof.statement_digest, proof.token), (Arc::clone(tokens), k));
    Ok(proof)
}

pub fn snark_verify(params: &SnarkParams, stmt: &SigCountStatement, proof: &ProofToken) -> bool {
    let digest = stmt.digest();
    proof.statement_digest == digest
        && params
            .registry
            .read()
            .expect("registry poisoned")
            .contains_key(&(digest, proof.token))
}

/// The knowledge extractor: the stored witness of a registered proof.
pub fn snark_extract(params: &SnarkParams, proof: &ProofToken) -> Result<Vec<SignatureToken>, SnarkError> {
    params
        .registry
        .read()
        .expect("registry poisoned")
        .get(&(proof.statement_digest, proof.token))
        .filter(|(_, len)| *len > 0)
        .map(|(w, len)| w[..*len].to_vec())
        .ok_or(SnarkError::NoWitness)
}
