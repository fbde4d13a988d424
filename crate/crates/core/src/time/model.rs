//! The horizon-`T` model and its trainer.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::instance::{time_next_level, TimeInstance, TimePublic};
use super::payload::{decode_input, TimeInput, TimePayload};
use crate::crypto::codec::Writer;
use crate::crypto::fhe::{fhe_eval, fhe_register, CircuitHandle, FhePublic};
use crate::crypto::ivc::IvcError;
use crate::data::level::isqrt;
use crate::data::payload::{Widths, BOTTOM};
use crate::error::PartyFailure;
use crate::game::{Model, PartyCtx, PrivateState, Trainer};

/// Chain snapshots indexed by step count, answering up to `cap`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Snapshots {
    pub cap: u64,
    pub entries: BTreeMap<u64, TimePayload>,
}

impl Snapshots {
    pub fn answer(&self, x: &TimePayload) -> Option<TimePayload> {
        let target = time_next_level(x.t).ok()?;
        if target > self.cap {
            return None;
        }
        self.entries.range(target..).next().map(|(_, p)| *p)
    }

    fn encode_into(&self, mut w: Writer) -> Writer {
        w = w.u64(self.cap).u64(self.entries.len() as u64);
        for p in self.entries.values() {
            w = w.u64(p.t).field(&p.state).field(&p.proof.encode());
        }
        w
    }
}

/// Steps at which the trainer keeps a snapshot: multiples of `⌊√T⌋` and `T`.
pub fn snapshot_steps(t: u64) -> Vec<u64> {
    let s = isqrt(t).max(1);
    let mut steps: Vec<u64> = (1..=t / s).map(|j| j * s).collect();
    if steps.last() != Some(&t) {
        steps.push(t);
    }
    steps
}

#[derive(Clone)]
pub struct TimeModel {
    snapshots: Arc<Snapshots>,
    circuit: CircuitHandle,
    fhe: FhePublic,
    widths: Widths,
}

impl std::fmt::Debug for TimeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeModel")
            .field("cap", &self.snapshots.cap)
            .field("snapshots", &self.snapshots.entries.len())
            .finish_non_exhaustive()
    }
}

fn clear_rule(snapshots: &Snapshots, widths: Widths, x: &[u8]) -> Vec<u8> {
    TimePayload::decode(x, widths.clear)
        .and_then(|x| snapshots.answer(&x))
        .map_or_else(|| BOTTOM.to_vec(), |y| y.encode(widths.clear))
}

impl TimeModel {
    pub fn new(public: &TimePublic, snapshots: Snapshots) -> Self {
        let snapshots = Arc::new(snapshots);
        let widths = public.widths;
        let description = Self::describe(&snapshots, widths);
        let rule = Arc::clone(&snapshots);
        let circuit = fhe_register(
            &public.fhe,
            &description,
            Arc::new(move |m: &[u8]| clear_rule(&rule, widths, m)),
        );
        Self {
            snapshots,
            circuit,
            fhe: public.fhe.clone(),
            widths,
        }
    }

    fn describe(snapshots: &Snapshots, widths: Widths) -> Vec<u8> {
        snapshots
            .encode_into(Writer::new().raw(b"time-model").u64(widths.clear as u64))
            .finish()
    }

    pub fn snapshots(&self) -> &Snapshots {
        &self.snapshots
    }

    pub fn cap(&self) -> u64 {
        self.snapshots.cap
    }
}

impl Model for TimeModel {
    fn apply(&self, x: &[u8]) -> Vec<u8> {
        match decode_input(self.widths, x) {
            Some(TimeInput::Clear(_)) => clear_rule(&self.snapshots, self.widths, x),
            Some(TimeInput::Enc(e)) => fhe_eval(&self.fhe, self.circuit, &e.body).encode(),
            None => BOTTOM.to_vec(),
        }
    }

    fn encode(&self) -> Vec<u8> {
        let mut bytes = Self::describe(&self.snapshots, self.widths);
        bytes.extend(Writer::new().field(&self.circuit.0).finish());
        bytes
    }
}

/// The trainer's chain frontier after `T` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimePrivate {
    pub frontier: TimePayload,
}

impl PrivateState for TimePrivate {
    fn encode(&self) -> Vec<u8> {
        Writer::new()
            .u64(self.frontier.t)
            .field(&self.frontier.state)
            .field(&self.frontier.proof.encode())
            .finish()
    }
}

pub(crate) fn ivc_failure(e: IvcError) -> PartyFailure {
    match e {
        IvcError::Budget(b) => PartyFailure::Budget(b),
        other => PartyFailure::abort(other.to_string()),
    }
}

/// Runs the language for `t` steps on its own meter and keeps snapshots.
/// Takes no samples.
#[derive(Debug, Clone, Copy)]
pub struct TimeTrainer {
    pub t: u64,
}

impl Trainer<TimeInstance> for TimeTrainer {
    type Model = TimeModel;
    type Private = TimePrivate;

    fn train(&self, ctx: &mut PartyCtx<'_, TimeInstance>) -> Result<(TimeModel, TimePrivate), PartyFailure> {
        let public = ctx.public;
        let (state, proof) = public.origin();
        let mut current = TimePayload { t: 0, state, proof };
        let mut snapshots = Snapshots {
            cap: self.t,
            entries: BTreeMap::new(),
        };
        for target in snapshot_steps(self.t) {
            current = public
                .extend_checked(&current, target - current.t, &ctx.steps)
                .map_err(ivc_failure)?;
            snapshots.entries.insert(target, current);
        }
        ctx.note("snapshots", snapshots.entries.len() as f64);
        Ok((TimeModel::new(public, snapshots), TimePrivate { frontier: current }))
    }
}
