//! Signatures of the fixed message `m = 0`.
//!
//! A deterministic scheme yields one signature per message, so each token
//! carries a fresh 16-byte nonce and the signature binds `0 ∥ nonce`.
//! Distinct tokens are then countable, and strong unforgeability of Ed25519
//! under strict verification bounds the number of valid tokens a party can
//! hold by the number it has seen.

use std::collections::HashSet;
use std::sync::{Arc, RwLock};

use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};

use super::codec::{Reader, Writer};
use super::{random_bytes, sha256, Digest};

pub const NONCE_LEN: usize = 16;
pub const TOKEN_ENCODED_LEN: usize = 4 + NONCE_LEN + 4 + 64;

/// The message being signed, as one byte.
const MESSAGE_ZERO: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignatureToken {
    pub nonce: [u8; NONCE_LEN],
    pub core: [u8; 64],
}

impl SignatureToken {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new().field(&self.nonce).field(&self.core).finish()
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = Reader::new(bytes);
        let token = Self::read(&mut r)?;
        r.is_exhausted().then_some(token)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Option<Self> {
        let nonce = r.fixed::<NONCE_LEN>()?;
        let core = r.fixed::<64>()?;
        Some(Self { nonce, core })
    }

    fn key(&self) -> [u8; NONCE_LEN + 64] {
        let mut k = [0u8; NONCE_LEN + 64];
        k[..NONCE_LEN].copy_from_slice(&self.nonce);
        k[NONCE_LEN..].copy_from_slice(&self.core);
        k
    }
}

fn signed_message(nonce: &[u8; NONCE_LEN]) -> [u8; 1 + NONCE_LEN] {
    let mut msg = [0u8; 1 + NONCE_LEN];
    msg[0] = MESSAGE_ZERO;
    msg[1..].copy_from_slice(nonce);
    msg
}

/// Verification key. Successful verifications are memoized; verification is
/// deterministic, so the memo never changes an answer.
#[derive(Clone)]
pub struct SigPublicKey {
    key: VerifyingKey,
    verified: Arc<RwLock<HashSet<[u8; NONCE_LEN + 64]>>>,
}

impl std::fmt::Debug for SigPublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("SigPublicKey").field(&self.key).finish()
    }
}

impl SigPublicKey {
    pub fn from_bytes(bytes: &[u8; 32]) -> Option<Self> {
        let key = VerifyingKey::from_bytes(bytes).ok()?;
        Some(Self {
            key,
            verified: Arc::default(),
        })
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.key.to_bytes()
    }

    /// Digest bound into proof statements.
    pub fn digest(&self) -> Digest {
        sha256(&[b"sig-vk", &self.key.to_bytes()])
    }

    fn remember(&self, token: &SignatureToken) {
        self.verified
            .write()
            .expect("verification memo poisoned")
            .insert(token.key());
    }
}

pub struct SigKeypair {
    signing: SigningKey,
    public: SigPublicKey,
}

impl SigKeypair {
    /// Rebuild from the 32-byte secret; the verification key follows
    /// deterministically.
    pub fn from_secret(secret: &[u8; 32]) -> Self {
        let signing = SigningKey::from_bytes(secret);
        let public = SigPublicKey {
            key: signing.verifying_key(),
            verified: Arc::default(),
        };
        Self { signing, public }
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn public(&self) -> &SigPublicKey {
        &self.public
    }
}

pub fn sig_keygen<R: RngCore + CryptoRng>(rng: &mut R) -> SigKeypair {
    SigKeypair::from_secret(&random_bytes::<32>(rng))
}

/// A fresh token: a new nonce and a signature binding it to message 0.
pub fn sig_sign_zero<R: RngCore>(keypair: &SigKeypair, rng: &mut R) -> SignatureToken {
    let nonce = random_bytes::<NONCE_LEN>(rng);
    let core = keypair.signing.sign(&signed_message(&nonce)).to_bytes();
    let token = SignatureToken { nonce, core };
    // Honest signatures always verify.
    keypair.public.remember(&token);
    token
}

pub fn sig_verify(pk: &SigPublicKey, token: &SignatureToken) -> bool {
    if pk
        .verified
        .read()
        .expect("verification memo poisoned")
        .contains(&token.key())
    {
        return true;
    }
    let signature = Signature::from_bytes(&token.core);
    let ok = pk.key.verify_strict(&signed_message(&token.nonce), &signature).is_ok();
    if ok {
        pk.remember(token);
    }
    ok
}

/// Verification over raw token bytes; malformed bytes verify as 0.
pub fn sig_verify_bytes(pk: &SigPublicKey, bytes: &[u8]) -> bool {
    SignatureToken::decode(bytes).is_some_and(|t| sig_verify(pk, &t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;

    #[test]
    fn honest_tokens_verify() {
        let mut rng = rng_for(1, "sig");
        let kp = sig_keygen(&mut rng);
        let t = sig_sign_zero(&kp, &mut rng);
        assert!(sig_verify(kp.public(), &t));
        assert!(sig_verify_bytes(kp.public(), &t.encode()));
    }

    #[test]
    fn verification_does_not_rely_on_the_memo() {
        let mut rng = rng_for(2, "sig");
        let kp = sig_keygen(&mut rng);
        let t = sig_sign_zero(&kp, &mut rng);
        let cold = SigPublicKey::from_bytes(&kp.public().to_bytes()).unwrap();
        assert!(sig_verify(&cold, &t));
    }

    #[test]
    fn flipped_core_byte_fails() {
        let mut rng = rng_for(3, "sig");
        let kp = sig_keygen(&mut rng);
        let t = sig_sign_zero(&kp, &mut rng);
        for i in [0usize, 17, 63] {
            let mut bad = t;
            bad.core[i] ^= 0x01;
            assert!(!sig_verify(kp.public(), &bad), "byte {i}");
        }
        let mut bad = t;
        bad.nonce[0] ^= 0x80;
        assert!(!sig_verify(kp.public(), &bad));
    }

    #[test]
    fn other_keypair_rejects() {
        let mut rng = rng_for(4, "sig");
        let a = sig_keygen(&mut rng);
        let b = sig_keygen(&mut rng);
        let t = sig_sign_zero(&a, &mut rng);
        assert!(!sig_verify(b.public(), &t));
    }

    #[test]
    fn malformed_bytes_verify_as_zero() {
        let mut rng = rng_for(5, "sig");
        let kp = sig_keygen(&mut rng);
        assert!(!sig_verify_bytes(kp.public(), b""));
        let enc = sig_sign_zero(&kp, &mut rng).encode();
        assert_eq!(enc.len(), TOKEN_ENCODED_LEN);
        assert!(!sig_verify_bytes(kp.public(), &enc[..enc.len() - 1]));
    }

    #[test]
    fn public_key_derives_from_secret() {
        let mut rng = rng_for(6, "sig");
        let kp = sig_keygen(&mut rng);
        let again = SigKeypair::from_secret(&kp.secret_bytes());
        assert_eq!(kp.public().to_bytes(), again.public().to_bytes());
    }
}
