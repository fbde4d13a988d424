//! Self-iteration against the time model. The attacker needs no trainer
//! secrets: one step of the language gives it a level-1 payload, and the
//! model's encrypted answers do the rest.

use rand::Rng;

use super::instance::{time_next_level, TimeInstance, TimePublic};
use super::model::ivc_failure;
use super::payload::{decode_input, encode_input, TimeInput, TimePayload};
use crate::crypto::fhe::{fhe_decrypt, fhe_encrypt, Ciphertext, Identity, IdentityKey};
use crate::data::payload::EncPayload;
use crate::error::PartyFailure;
use crate::game::{Challenger, Model, Origin, PartyCtx};

const MAX_QUERIES: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, Default)]
pub struct TimeAttack;

fn accept(public: &TimePublic, prev: &TimePayload, next: &TimePayload) -> bool {
    time_next_level(prev.t).is_ok_and(|required| next.t >= required) && public.payload_valid(next)
}

impl<M: Model> Challenger<TimeInstance, M> for TimeAttack {
    fn origin(&self) -> Origin {
        Origin::Attacker
    }

    fn challenge(&self, f: &M, ctx: &mut PartyCtx<'_, TimeInstance>) -> Result<Vec<Vec<u8>>, PartyFailure> {
        let public = ctx.public;
        let widths = public.widths;
        let mut keys: Vec<(Identity, IdentityKey)> = Vec::with_capacity(2);
        let mut clear_xs = Vec::new();
        while keys.len() < 2 && ctx.oracle.remaining() > 0 {
            let (x, _) = ctx.oracle.draw()?;
            match decode_input(widths, &x) {
                Some(TimeInput::Enc(e)) if keys.iter().all(|(id, _)| *id != e.id2) => keys.push((e.id2, e.key2)),
                Some(TimeInput::Clear(_)) => clear_xs.push(x),
                _ => {}
            }
        }
        if keys.len() < 2 {
            return Err(PartyFailure::abort(
                "fewer than two encrypted samples among the attacker's draws",
            ));
        }
        let (id_dagger, key_dagger) = keys.pop().expect("two keys");
        let (id_star, key_star) = keys.pop().expect("two keys");

        let (state, proof) = public.origin();
        let origin = TimePayload { t: 0, state, proof };
        let mut current = public.extend_checked(&origin, 1, &ctx.steps).map_err(ivc_failure)?;
        let own_clear = current.encode(widths.clear);

        let wrap = |x: &TimePayload, rng: &mut crate::seed::TrialRng| {
            let body = fhe_encrypt(&public.fhe, &id_star, &x.encode(widths.clear), rng);
            encode_input(
                widths,
                &TimeInput::Enc(EncPayload {
                    body,
                    id1: id_star,
                    id2: id_dagger,
                    key2: key_dagger,
                }),
            )
        };

        let mut queries = 0u64;
        while queries < MAX_QUERIES {
            let answer = f.apply(&wrap(&current, &mut ctx.rng));
            queries += 1;
            let next = Ciphertext::decode(&answer)
                .and_then(|c| fhe_decrypt(&key_star, &c).ok())
                .and_then(|m| TimePayload::decode(&m, widths.clear));
            match next {
                Some(next) if accept(public, &current, &next) => current = next,
                _ => break,
            }
        }
        ctx.note("queries", queries as f64);
        ctx.note("frontier_level", current.t as f64);

        let mut batch = Vec::with_capacity(ctx.params.q);
        let mut encrypted = 0u64;
        for i in 0..ctx.params.q {
            if ctx.rng.gen::<bool>() {
                encrypted += 1;
                batch.push(wrap(&current, &mut ctx.rng));
            } else {
                batch.push(clear_xs.get(i).cloned().unwrap_or_else(|| own_clear.clone()));
            }
        }
        ctx.note("encrypted_outputs", encrypted as f64);
        Ok(batch)
    }
}
