//! The self-iteration attack: start from a level-1 input, feed the model's
//! encrypted answers back to it until an answer fails, then submit the last
//! valid input either encrypted (so nothing about it is visible) or swap in
//! a natural clear input, each with probability ½.

use rand::Rng;

use super::instance::{DataInstance, DataPublic};
use super::level::next_level;
use super::payload::{ClearPayload, EncPayload, Payload};
use crate::crypto::fhe::{fhe_decrypt, fhe_encrypt, Ciphertext, Identity, IdentityKey};
use crate::crypto::sig::SignatureToken;
use crate::crypto::snark::{snark_prove, snark_verify, SigCountStatement};
use crate::error::PartyFailure;
use crate::game::{Challenger, Model, Origin, PartyCtx};

/// Default sample allowance of the detection-game attacker.
pub const DEFAULT_ATTACK_SAMPLES: u64 = 8;

/// Guard against a model that keeps producing valid answers forever.
const MAX_QUERIES: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, Default)]
pub struct SelfIterationAttack;

/// What the attacker harvests from its draws.
struct Harvest {
    clear_x: Vec<u8>,
    token: SignatureToken,
    star: (Identity, IdentityKey),
    dagger: (Identity, IdentityKey),
}

fn harvest(ctx: &mut PartyCtx<'_, DataInstance>) -> Result<Harvest, PartyFailure> {
    let widths = ctx.public.widths;
    let mut clear: Option<(Vec<u8>, SignatureToken)> = None;
    let mut keys: Vec<(Identity, IdentityKey)> = Vec::with_capacity(2);
    while (clear.is_none() || keys.len() < 2) && ctx.oracle.remaining() > 0 {
        let (x, _) = ctx.oracle.draw()?;
        match widths.decode(&x) {
            Some(Payload::Clear(c)) if clear.is_none() => clear = Some((x, c.token)),
            Some(Payload::Enc(e)) if keys.len() < 2 && keys.iter().all(|(id, _)| *id != e.id2) => {
                keys.push((e.id2, e.key2));
            }
            _ => {}
        }
    }
    let Some((clear_x, token)) = clear else {
        return Err(PartyFailure::abort("no clear sample among the attacker's draws"));
    };
    if keys.len() < 2 {
        return Err(PartyFailure::abort(
            "fewer than two encrypted samples among the attacker's draws",
        ));
    }
    let dagger = keys.pop().expect("two keys");
    let star = keys.pop().expect("two keys");
    Ok(Harvest {
        clear_x,
        token,
        star,
        dagger,
    })
}

/// The checks the attacker can run on an iterate: same token, enough level
/// growth, and a proof that verifies for the claimed level.
fn accept(public: &DataPublic, prev: &ClearPayload, next: &ClearPayload) -> bool {
    let Ok(required) = next_level(prev.level) else {
        return false;
    };
    next.token == prev.token
        && next.level >= required
        && snark_verify(
            &public.snark,
            &SigCountStatement::new(next.level, &public.pk),
            &next.proof,
        )
}

impl<M: Model> Challenger<DataInstance, M> for SelfIterationAttack {
    fn origin(&self) -> Origin {
        Origin::Attacker
    }

    fn challenge(&self, f: &M, ctx: &mut PartyCtx<'_, DataInstance>) -> Result<Vec<Vec<u8>>, PartyFailure> {
        let public = ctx.public;
        let widths = public.widths;
        let h = harvest(ctx)?;
        let (id_star, key_star) = h.star;
        let (id_dagger, key_dagger) = h.dagger;

        let stmt = SigCountStatement::new(1, &public.pk);
        let proof = snark_prove(&public.snark, &public.pk, &stmt, &[h.token], &mut ctx.rng)
            .map_err(|e| PartyFailure::abort(format!("level-1 proof: {e}")))?;
        let mut current = ClearPayload {
            token: h.token,
            level: 1,
            proof,
        };

        let wrap = |x: &ClearPayload, rng: &mut crate::seed::TrialRng| {
            let body = fhe_encrypt(&public.fhe, &id_star, &x.encode(widths.clear), rng);
            widths.encode(&Payload::Enc(EncPayload {
                body,
                id1: id_star,
                id2: id_dagger,
                key2: key_dagger,
            }))
        };

        let mut queries = 0u64;
        while queries < MAX_QUERIES {
            let answer = f.apply(&wrap(&current, &mut ctx.rng));
            queries += 1;
            let next = Ciphertext::decode(&answer)
                .and_then(|c| fhe_decrypt(&key_star, &c).ok())
                .and_then(|m| ClearPayload::decode(&m, widths.clear));
            match next {
                Some(next) if accept(public, &current, &next) => current = next,
                _ => break,
            }
        }
        ctx.note("queries", queries as f64);
        ctx.note("frontier_level", current.level as f64);

        let mut batch = Vec::with_capacity(ctx.params.q);
        let mut encrypted = 0u64;
        for _ in 0..ctx.params.q {
            if ctx.rng.gen::<bool>() {
                encrypted += 1;
                batch.push(wrap(&current, &mut ctx.rng));
            } else {
                batch.push(fresh_clear(ctx).unwrap_or_else(|| h.clear_x.clone()));
            }
        }
        ctx.note("encrypted_outputs", encrypted as f64);
        Ok(batch)
    }
}

/// A clear input from the remaining allowance, if one turns up.
fn fresh_clear(ctx: &mut PartyCtx<'_, DataInstance>) -> Option<Vec<u8>> {
    while ctx.oracle.remaining() > 0 {
        let (x, _) = ctx.oracle.draw().ok()?;
        if matches!(ctx.public.widths.decode(&x), Some(Payload::Clear(_))) {
            return Some(x);
        }
    }
    None
}
