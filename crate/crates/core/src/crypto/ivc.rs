//! Incrementally verifiable computation over the hash-chain step function.
//!
//! A proof for `t` steps is a keyed commitment chain:
//!
//! ```text
//! comm_0     = H(key ∥ "ivc-start" ∥ z ∥ c_0)
//! comm_{i+1} = H(key ∥ comm_i ∥ (i+1) ∥ c_{i+1})
//! ```
//!
//! The chain key never leaves the keys object, and every commitment produced
//! by an honest update is registered against `(t, c_t)`. Verification is a
//! registry lookup, so only honestly stepped states verify.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use super::codec::{Reader, Writer};
use super::npl::npl_step;
use super::{sha256, Digest};
use crate::budget::StepMeter;
use crate::error::BudgetError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IvcError {
    #[error("input proof does not verify")]
    InvalidProof,
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IvcProof {
    pub t: u64,
    pub commitment: Digest,
}

impl IvcProof {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new().u64(self.t).field(&self.commitment).finish()
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Option<Self> {
        Some(Self {
            t: r.u64()?,
            commitment: r.fixed()?,
        })
    }
}

/// The statement "`state` is the configuration after `t` steps on `z`".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IvcClaim {
    pub z_digest: Digest,
    pub t: u64,
    pub state: Digest,
}

struct IvcInner {
    chain_key: [u8; 32],
    registry: RwLock<HashMap<(u64, Digest), Digest>>,
}

/// Proving and verification keys for one `z`. Clones share the registry.
#[derive(Clone)]
pub struct IvcKeys {
    pub z_digest: Digest,
    inner: Arc<IvcInner>,
}

impl std::fmt::Debug for IvcKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IvcKeys")
            .field("z_digest", &self.z_digest)
            .finish_non_exhaustive()
    }
}

impl IvcKeys {
    pub fn new(z_digest: Digest, chain_key: [u8; 32]) -> Self {
        Self {
            z_digest,
            inner: Arc::new(IvcInner {
                chain_key,
                registry: RwLock::default(),
            }),
        }
    }

    pub fn chain_key(&self) -> [u8; 32] {
        self.inner.chain_key
    }

    pub fn registered(&self) -> usize {
        self.inner.registry.read().expect("ivc registry poisoned").len()
    }

    /// Registered `(t, state, commitment)` triples in canonical order.
    pub fn snapshot(&self) -> Vec<(u64, Digest, Digest)> {
        let registry = self.inner.registry.read().expect("ivc registry poisoned");
        let mut out: Vec<_> = registry.iter().map(|(&(t, s), &c)| (t, s, c)).collect();
        out.sort_unstable();
        out
    }

    pub fn restore(&self, entries: impl IntoIterator<Item = (u64, Digest, Digest)>) {
        let mut registry = self.inner.registry.write().expect("ivc registry poisoned");
        for (t, s, c) in entries {
            registry.insert((t, s), c);
        }
    }

    fn register(&self, t: u64, state: Digest, commitment: Digest) {
        self.inner
            .registry
            .write()
            .expect("ivc registry poisoned")
            .insert((t, state), commitment);
    }

    /// Commitment of the first link.
    pub fn start_commitment(&self, start: &Digest) -> Digest {
        sha256(&[&self.inner.chain_key, b"ivc-start", &self.z_digest, start])
    }

    /// Commitment of step `t` with state `state`, following `prev`.
    pub fn link_commitment(&self, prev: &Digest, t: u64, state: &Digest) -> Digest {
        sha256(&[&self.inner.chain_key, prev, &t.to_be_bytes(), state])
    }
}

/// Proof for zero steps: the start state itself.
pub fn ivc_start(keys: &IvcKeys, start: Digest) -> IvcProof {
    let commitment = keys.start_commitment(&start);
    keys.register(0, start, commitment);
    IvcProof { t: 0, commitment }
}

/// Run one more step from a verified `(state, proof)`, charging it to `meter`.
pub fn ivc_update(
    keys: &IvcKeys,
    state: &Digest,
    proof: &IvcProof,
    meter: &StepMeter,
) -> Result<(Digest, IvcProof), IvcError> {
    let claim = IvcClaim {
        z_digest: keys.z_digest,
        t: proof.t,
        state: *state,
    };
    if !ivc_verify(keys, &claim, proof) {
        return Err(IvcError::InvalidProof);
    }
    meter.charge(1)?;
    let next = npl_step(state, meter.tap());
    let t = proof.t + 1;
    let commitment = keys.link_commitment(&proof.commitment, t, &next);
    keys.register(t, next, commitment);
    Ok((next, IvcProof { t, commitment }))
}

/// `t` steps from `start`.
pub fn ivc_prove(keys: &IvcKeys, t: u64, start: Digest, meter: &StepMeter) -> Result<(Digest, IvcProof), IvcError> {
    let mut proof = ivc_start(keys, start);
    let mut state = start;
    for _ in 0..t {
        (state, proof) = ivc_update(keys, &state, &proof, meter)?;
    }
    Ok((state, proof))
}

pub fn ivc_verify(keys: &IvcKeys, claim: &IvcClaim, proof: &IvcProof) -> bool {
    claim.z_digest == keys.z_digest
        && claim.t == proof.t
        && keys
            .inner
            .registry
            .read()
            .expect("ivc registry poisoned")
            .get(&(claim.t, claim.state))
            == Some(&proof.commitment)
}
