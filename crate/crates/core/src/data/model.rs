//! The level-`K` model and its trainer.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::instance::{DataInstance, DataPublic};
use super::level::{isqrt, next_level};
use super::payload::{ClearPayload, Payload, Widths, BOTTOM};
use crate::crypto::codec::Writer;
use crate::crypto::fhe::{fhe_eval, fhe_register, CircuitHandle, FhePublic};
use crate::crypto::sig::SignatureToken;
use crate::crypto::snark::{snark_prove_prefix, ProofToken, SigCountStatement};
use crate::error::PartyFailure;
use crate::game::{Model, PartyCtx, PrivateState, Trainer};
use crate::seed::TrialRng;

/// Proofs indexed by level, answering up to `cap`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProofTable {
    pub cap: u64,
    pub entries: BTreeMap<u64, ProofToken>,
}

impl ProofTable {
    /// Echo `x`'s token at the smallest table level reaching
    /// `x.level + ⌊√x.level⌋`, or nothing above the cap.
    pub fn answer(&self, x: &ClearPayload) -> Option<ClearPayload> {
        let target = next_level(x.level).ok()?;
        if target > self.cap {
            return None;
        }
        let (&level, &proof) = self.entries.range(target..).next()?;
        Some(ClearPayload {
            token: x.token,
            level,
            proof,
        })
    }

    /// Prove every level in `levels` from prefixes of `tokens`.
    pub fn prove_levels(
        &mut self,
        public: &DataPublic,
        tokens: &Arc<[SignatureToken]>,
        levels: impl IntoIterator<Item = u64>,
        rng: &mut TrialRng,
    ) -> Result<(), PartyFailure> {
        for level in levels {
            let stmt = SigCountStatement::new(level, &public.pk);
            let proof = snark_prove_prefix(&public.snark, &public.pk, &stmt, tokens, rng)
                .map_err(|e| PartyFailure::abort(format!("proof for level {level}: {e}")))?;
            self.entries.insert(level, proof);
        }
        Ok(())
    }

    fn encode_into(&self, w: Writer) -> Writer {
        let mut w = w.u64(self.cap).u64(self.entries.len() as u64);
        for (level, proof) in &self.entries {
            w = w.u64(*level).field(&proof.encode());
        }
        w
    }
}

/// Levels the trainer proves for cap `k`: every multiple of `⌊√k⌋` up to
/// `⌊√k⌋²`, plus `k` itself when `k` is not a square.
pub fn training_levels(k: u64) -> Vec<u64> {
    let s = isqrt(k);
    let mut levels: Vec<u64> = (1..=s).map(|j| j * s).collect();
    if s * s < k {
        levels.push(k);
    }
    levels
}

/// `f`: the table rule on clear inputs, homomorphic evaluation of the same
/// rule on encrypted ones, [`BOTTOM`] on anything else.
#[derive(Clone)]
pub struct DataModel {
    anchor: Option<SignatureToken>,
    table: Arc<ProofTable>,
    circuit: CircuitHandle,
    fhe: FhePublic,
    widths: Widths,
}

impl std::fmt::Debug for DataModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DataModel")
            .field("cap", &self.table.cap)
            .field("levels", &self.table.entries.len())
            .finish_non_exhaustive()
    }
}

impl DataModel {
    pub fn new(public: &DataPublic, anchor: Option<SignatureToken>, table: ProofTable) -> Self {
        let table = Arc::new(table);
        let widths = public.widths;
        let description = Self::describe(anchor.as_ref(), &table, widths);
        let rule = Arc::clone(&table);
        let circuit = fhe_register(
            &public.fhe,
            &description,
            Arc::new(move |m: &[u8]| clear_rule(&rule, widths, m)),
        );
        Self {
            anchor,
            table,
            circuit,
            fhe: public.fhe.clone(),
            widths,
        }
    }

    /// The model that answers nothing.
    pub fn dummy(public: &DataPublic) -> Self {
        Self::new(public, None, ProofTable::default())
    }

    fn describe(anchor: Option<&SignatureToken>, table: &ProofTable, widths: Widths) -> Vec<u8> {
        let w = Writer::new()
            .field(&anchor.map(SignatureToken::encode).unwrap_or_default())
            .u64(widths.clear as u64);
        table.encode_into(w).finish()
    }

    pub fn table(&self) -> &ProofTable {
        &self.table
    }

    pub fn cap(&self) -> u64 {
        self.table.cap
    }

    pub fn is_dummy(&self) -> bool {
        self.table.entries.is_empty()
    }

    pub fn circuit(&self) -> CircuitHandle {
        self.circuit
    }
}

fn clear_rule(table: &ProofTable, widths: Widths, x: &[u8]) -> Vec<u8> {
    ClearPayload::decode(x, widths.clear)
        .and_then(|x| table.answer(&x))
        .map_or_else(|| BOTTOM.to_vec(), |y| y.encode(widths.clear))
}

impl Model for DataModel {
    fn apply(&self, x: &[u8]) -> Vec<u8> {
        match self.widths.decode(x) {
            Some(Payload::Clear(_)) => clear_rule(&self.table, self.widths, x),
            Some(Payload::Enc(enc)) => fhe_eval(&self.fhe, self.circuit, &enc.body).encode(),
            None => BOTTOM.to_vec(),
        }
    }

    fn encode(&self) -> Vec<u8> {
        let mut bytes = Self::describe(self.anchor.as_ref(), &self.table, self.widths);
        bytes.extend(Writer::new().field(&self.circuit.0).finish());
        bytes
    }
}

/// Signature tokens harvested during training.
#[derive(Debug, Clone)]
pub struct TrainerPrivate {
    pub tokens: Arc<[SignatureToken]>,
}

impl PrivateState for TrainerPrivate {
    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new().u64(self.tokens.len() as u64);
        for t in self.tokens.iter() {
            w = w.field(&t.encode());
        }
        w.finish()
    }
}

/// Learns every level up to `k` from `k` clear samples, drawing at most its
/// sample allowance (normally `4k`).
#[derive(Debug, Clone, Copy)]
pub struct DataTrainer {
    pub k: u64,
}

impl Trainer<DataInstance> for DataTrainer {
    type Model = DataModel;
    type Private = TrainerPrivate;

    fn train(&self, ctx: &mut PartyCtx<'_, DataInstance>) -> Result<(DataModel, TrainerPrivate), PartyFailure> {
        let public = ctx.public;
        let want = usize::try_from(self.k).map_err(|_| PartyFailure::abort("K does not fit in memory"))?;
        let mut seen = HashSet::with_capacity(want);
        let mut tokens = Vec::with_capacity(want);
        while tokens.len() < want && ctx.oracle.remaining() > 0 {
            let (x, _) = ctx.oracle.draw()?;
            if let Some(Payload::Clear(c)) = public.widths.decode(&x) {
                if seen.insert(c.token) {
                    tokens.push(c.token);
                }
            }
        }
        ctx.note("clear_samples", tokens.len() as f64);
        let tokens: Arc<[SignatureToken]> = tokens.into();
        if tokens.len() < want || want == 0 {
            ctx.note("dummy", 1.0);
            return Ok((DataModel::dummy(public), TrainerPrivate { tokens }));
        }
        let mut table = ProofTable {
            cap: self.k,
            ..ProofTable::default()
        };
        table.prove_levels(public, &tokens, training_levels(self.k), &mut ctx.rng)?;
        ctx.note("table_entries", table.entries.len() as f64);
        let model = DataModel::new(public, tokens.first().copied(), table);
        Ok((model, TrainerPrivate { tokens }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_levels_for_squares_and_non_squares() {
        assert_eq!(training_levels(16), vec![4, 8, 12, 16]);
        assert_eq!(training_levels(20), vec![4, 8, 12, 16, 20]);
        assert_eq!(training_levels(400).len(), 20);
        assert_eq!(training_levels(1), vec![1]);
    }

    #[test]
    fn dummy_answers_bottom_in_both_forms() {
        use crate::data::instance::Form;
        use crate::game::Task;
        let inst = DataInstance::generate(Default::default(), 1).unwrap();
        let f = DataModel::dummy(inst.public());
        let mut rng = crate::seed::rng_for(1, "m");
        let (x, _) = inst.sample_with(Some(Form::Clear), None, &mut rng);
        assert_eq!(f.apply(&x), BOTTOM);
        assert_eq!(f.apply(b"junk"), BOTTOM);
        let (x, _) = inst.sample_with(Some(Form::Enc), None, &mut rng);
        assert!(inst.h_eval(&x, &f.apply(&x)));
    }
}
