//! Payload layout for the time task: `0x03 ∥ [t] ∥ [c] ∥ [π]` in clear,
//! `0x04` followed by the same envelope as the data task when encrypted.

use crate::crypto::codec::{Reader, Writer};
use crate::crypto::ivc::IvcProof;
use crate::crypto::Digest;
use crate::data::payload::{EncPayload, Widths};

pub const TAG_TIME_CLEAR: u8 = 0x03;
pub const TAG_TIME_ENC: u8 = 0x04;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimePayload {
    pub t: u64,
    pub state: Digest,
    pub proof: IvcProof,
}

impl TimePayload {
    pub fn encode(&self, width: usize) -> Vec<u8> {
        Writer::new()
            .raw(&[TAG_TIME_CLEAR])
            .u64(self.t)
            .field(&self.state)
            .field(&self.proof.encode())
            .padded(width)
            .expect("clear width fits a time payload")
    }

    pub fn decode(bytes: &[u8], width: usize) -> Option<Self> {
        if bytes.len() != width {
            return None;
        }
        let mut r = Reader::new(bytes);
        if r.byte()? != TAG_TIME_CLEAR {
            return None;
        }
        let t = r.u64()?;
        let state = r.fixed()?;
        let mut pr = Reader::new(r.field()?);
        let proof = IvcProof::read(&mut pr)?;
        let ok = t >= 1 && pr.is_exhausted() && r.only_zero_padding();
        ok.then_some(Self { t, state, proof })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeInput {
    Clear(TimePayload),
    Enc(EncPayload),
}

pub fn encode_input(widths: Widths, x: &TimeInput) -> Vec<u8> {
    match x {
        TimeInput::Clear(p) => p.encode(widths.clear),
        TimeInput::Enc(e) => e.encode_tagged(TAG_TIME_ENC, widths.enc),
    }
}

pub fn decode_input(widths: Widths, bytes: &[u8]) -> Option<TimeInput> {
    match *bytes.first()? {
        TAG_TIME_CLEAR => TimePayload::decode(bytes, widths.clear).map(TimeInput::Clear),
        TAG_TIME_ENC => EncPayload::decode_tagged(bytes, TAG_TIME_ENC, widths.enc).map(TimeInput::Enc),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_malformed() {
        let w = Widths::default();
        let p = TimePayload {
            t: 42,
            state: [3u8; 32],
            proof: IvcProof {
                t: 42,
                commitment: [4u8; 32],
            },
        };
        let bytes = p.encode(w.clear);
        assert_eq!(decode_input(w, &bytes), Some(TimeInput::Clear(p)));
        assert_eq!(decode_input(w, &bytes[..100]), None);
        assert_eq!(decode_input(w, b""), None);
        let zero = TimePayload { t: 0, ..p };
        assert_eq!(decode_input(w, &zero.encode(w.clear)), None);
    }
}
