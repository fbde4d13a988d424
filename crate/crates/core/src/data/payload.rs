//! Byte layout of inputs and outputs.
//!
//! A clear payload is `0x01 ∥ [token] ∥ [level] ∥ [proof]`, zero-padded to
//! the clear width `W`. An encrypted payload is
//! `0x02 ∥ [ciphertext] ∥ [id₁] ∥ [id₂] ∥ [key₂]`, zero-padded to the
//! encrypted width. Brackets denote length-prefixed fields. The ciphertext
//! encrypts a padded clear payload under `id₁`.
//!
//! An encrypted pair's `y` is a bare ciphertext encoding, and the reserved
//! string [`BOTTOM`] stands for "no answer".

use crate::crypto::codec::{Reader, Writer};
use crate::crypto::fhe::{Ciphertext, Identity, IdentityKey};
use crate::crypto::sig::SignatureToken;
use crate::crypto::snark::ProofToken;

pub const TAG_CLEAR: u8 = 0x01;
pub const TAG_ENC: u8 = 0x02;

/// The no-answer output. No tag byte of a well-formed payload is `0xFF`.
pub const BOTTOM: &[u8] = &[0xFF];

/// Default clear width; an honest clear payload takes 165 bytes.
pub const DEFAULT_WIDTH: usize = 256;

/// Extra room an encrypted payload needs over the clear width.
pub const ENC_OVERHEAD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClearPayload {
    pub token: SignatureToken,
    pub level: u64,
    pub proof: ProofToken,
}

impl ClearPayload {
    pub fn encode(&self, width: usize) -> Vec<u8> {
        Writer::new()
            .raw(&[TAG_CLEAR])
            .field(&self.token.encode())
            .u64(self.level)
            .field(&self.proof.encode())
            .padded(width)
            .expect("clear width fits an honest payload")
    }

    pub fn decode(bytes: &[u8], width: usize) -> Option<Self> {
        if bytes.len() != width {
            return None;
        }
        let mut r = Reader::new(bytes);
        if r.byte()? != TAG_CLEAR {
            return None;
        }
        let token = SignatureToken::decode(r.field()?)?;
        let level = r.u64()?;
        let proof = ProofToken::decode(r.field()?)?;
        (level >= 1 && r.only_zero_padding()).then_some(Self { token, level, proof })
    }
}

/// The encrypted form, shared by both tasks up to the tag byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncPayload {
    pub body: Ciphertext,
    pub id1: Identity,
    pub id2: Identity,
    pub key2: IdentityKey,
}

impl EncPayload {
    pub fn encode_tagged(&self, tag: u8, width: usize) -> Vec<u8> {
        Writer::new()
            .raw(&[tag])
            .field(&self.body.encode())
            .field(&self.id1)
            .field(&self.id2)
            .field(&self.key2.encode())
            .padded(width)
            .expect("encrypted width fits an honest payload")
    }

    pub fn decode_tagged(bytes: &[u8], tag: u8, width: usize) -> Option<Self> {
        if bytes.len() != width {
            return None;
        }
        let mut r = Reader::new(bytes);
        if r.byte()? != tag {
            return None;
        }
        let body = Ciphertext::decode(r.field()?)?;
        let id1 = r.fixed()?;
        let id2 = r.fixed()?;
        let key2 = IdentityKey::decode(r.field()?)?;
        let consistent = body.identity == id1 && key2.identity == id2;
        (consistent && r.only_zero_padding()).then_some(Self { body, id1, id2, key2 })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Clear(ClearPayload),
    Enc(EncPayload),
}

/// Clear and encrypted widths of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Widths {
    pub clear: usize,
    pub enc: usize,
}

impl Widths {
    pub fn new(clear: usize) -> Self {
        Self {
            clear,
            enc: clear + ENC_OVERHEAD,
        }
    }

    pub fn encode(&self, p: &Payload) -> Vec<u8> {
        match p {
            Payload::Clear(c) => c.encode(self.clear),
            Payload::Enc(e) => e.encode_tagged(TAG_ENC, self.enc),
        }
    }

    /// `None` is the malformed marker.
    pub fn decode(&self, bytes: &[u8]) -> Option<Payload> {
        match *bytes.first()? {
            TAG_CLEAR => ClearPayload::decode(bytes, self.clear).map(Payload::Clear),
            TAG_ENC => EncPayload::decode_tagged(bytes, TAG_ENC, self.enc).map(Payload::Enc),
            _ => None,
        }
    }
}

impl Default for Widths {
    fn default() -> Self {
        Self::new(DEFAULT_WIDTH)
    }
}
