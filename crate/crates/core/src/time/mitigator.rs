//! The time-efficient mitigator: extend each valid input's own chain by
//! `⌊√t⌋` steps. Encrypted inputs go through a circuit bound to this
//! trial's step meter, so the work is charged the same way.

use std::sync::Arc;

use rand::Rng;

use super::instance::{TimeInstance, TimePublic};
use super::model::{TimeModel, TimePrivate};
use super::payload::{decode_input, TimeInput, TimePayload};
use crate::budget::StepMeter;
use crate::crypto::codec::Writer;
use crate::crypto::fhe::{fhe_eval, fhe_register};
use crate::data::level::isqrt;
use crate::data::payload::BOTTOM;
use crate::error::PartyFailure;
use crate::game::{Mitigator, PartyCtx};

#[derive(Debug, Clone, Copy, Default)]
pub struct TimeMitigator;

impl TimeMitigator {
    /// Step allowance covering `q` inputs up to level `t_max`.
    pub fn suggested_steps(t_max: u64, q: usize) -> u64 {
        isqrt(t_max) * q as u64
    }
}

/// Answer one clear payload, or [`BOTTOM`] when it does not verify or the
/// meter runs dry.
fn extend_one(public: &TimePublic, meter: &StepMeter, m: &[u8]) -> Vec<u8> {
    let w = public.widths;
    TimePayload::decode(m, w.clear)
        .filter(|x| public.payload_valid(x))
        .and_then(|x| public.extend(&x, isqrt(x.t), meter))
        .map_or_else(|| BOTTOM.to_vec(), |y| y.encode(w.clear))
}

impl Mitigator<TimeInstance, TimeModel, TimePrivate> for TimeMitigator {
    fn mitigate(
        &self,
        _f: &TimeModel,
        _private: &TimePrivate,
        xs: &[Vec<u8>],
        ctx: &mut PartyCtx<'_, TimeInstance>,
    ) -> Result<(Vec<Vec<u8>>, bool), PartyFailure> {
        let public = ctx.public;
        let inputs: Vec<Option<TimeInput>> = xs.iter().map(|x| decode_input(public.widths, x)).collect();
        let circuit = inputs.iter().any(|x| matches!(x, Some(TimeInput::Enc(_)))).then(|| {
            let nonce: [u8; 32] = ctx.rng.gen();
            let description = Writer::new().raw(b"time-mitigator").field(&nonce).finish();
            let (public, meter) = (public.clone(), Arc::clone(&ctx.steps));
            fhe_register(
                &ctx.public.fhe,
                &description,
                Arc::new(move |m: &[u8]| extend_one(&public, &meter, m)),
            )
        });
        let ys = xs
            .iter()
            .zip(&inputs)
            .map(|(x, parsed)| match (parsed, circuit) {
                (Some(TimeInput::Clear(_)), _) => extend_one(public, &ctx.steps, x),
                (Some(TimeInput::Enc(e)), Some(handle)) => fhe_eval(&public.fhe, handle, &e.body).encode(),
                _ => BOTTOM.to_vec(),
            })
            .collect();
        Ok((ys, false))
    }
}
