//! The sample-efficient mitigator. It draws `⌊2√K⌋` fresh signatures, proves
//! every level from `K + 1` to `K + ⌊2√K⌋` and answers with the strengthened
//! model. It never flags.

use std::collections::HashSet;
use std::sync::Arc;

use super::instance::DataInstance;
use super::level::isqrt;
use super::model::{DataModel, ProofTable, TrainerPrivate};
use super::payload::Payload;
use crate::crypto::sig::SignatureToken;
use crate::error::PartyFailure;
use crate::game::{Mitigator, Model, PartyCtx};

#[derive(Debug, Clone, Copy)]
pub struct DataMitigator {
    /// The trainer's level cap.
    pub k: u64,
}

impl DataMitigator {
    /// `⌊2√K⌋`.
    pub fn extension(&self) -> u64 {
        isqrt(4 * self.k)
    }

    pub fn cap(&self) -> u64 {
        self.k + self.extension()
    }

    /// Sample allowance the mitigator is designed for: `4·⌊2√K⌋`.
    pub fn suggested_samples(&self) -> u64 {
        4 * self.extension()
    }

    /// Build `f^strong` from the trainer's model and tokens plus fresh draws.
    pub fn strengthen(
        &self,
        f: &DataModel,
        private: &TrainerPrivate,
        ctx: &mut PartyCtx<'_, DataInstance>,
    ) -> Result<DataModel, PartyFailure> {
        let public = ctx.public;
        let extra = usize::try_from(self.extension()).map_err(|_| PartyFailure::abort("K too large"))?;
        let mut seen: HashSet<SignatureToken> = private.tokens.iter().copied().collect();
        let mut tokens: Vec<SignatureToken> = private.tokens.to_vec();
        let mut fresh = 0usize;
        while fresh < extra && ctx.oracle.remaining() > 0 {
            let (x, _) = ctx.oracle.draw()?;
            if let Some(Payload::Clear(c)) = public.widths.decode(&x) {
                if seen.insert(c.token) {
                    tokens.push(c.token);
                    fresh += 1;
                }
            }
        }
        ctx.note("fresh_tokens", fresh as f64);
        if fresh < extra {
            return Err(PartyFailure::abort(format!(
                "only {fresh} of {extra} fresh clear samples within the allowance"
            )));
        }
        let tokens: Arc<[SignatureToken]> = tokens.into();
        let mut table = ProofTable {
            cap: self.cap(),
            entries: f.table().entries.clone(),
        };
        let provable = (self.k + 1..=self.cap()).filter(|&level| level <= tokens.len() as u64);
        table.prove_levels(public, &tokens, provable, &mut ctx.rng)?;
        Ok(DataModel::new(public, tokens.first().copied(), table))
    }
}

impl Mitigator<DataInstance, DataModel, TrainerPrivate> for DataMitigator {
    fn mitigate(
        &self,
        f: &DataModel,
        private: &TrainerPrivate,
        xs: &[Vec<u8>],
        ctx: &mut PartyCtx<'_, DataInstance>,
    ) -> Result<(Vec<Vec<u8>>, bool), PartyFailure> {
        let strong = self.strengthen(f, private, ctx)?;
        Ok((xs.iter().map(|x| strong.apply(x)).collect(), false))
    }
}
