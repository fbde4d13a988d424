//! Game abstractions and the three-round trial runners.
//!
//! A trial follows the interaction of both defense games:
//!
//! 1. the trainer, with metered sample access, outputs a model `f` and a
//!    private state;
//! 2. the challenger (nature or an attacker) sees `f` and outputs a batch
//!    `x` of `q` inputs;
//! 3. the defender sees `f`, the private state and `x`, and outputs a flag
//!    `b` (detection) or a response batch `y` together with `b`
//!    (mitigation).
//!
//! The runner evaluates the error oracle on the result, records every
//! party's ledger and returns a [`Transcript`]. A party that fails, or that
//! tried to go past its allowance, aborts the trial and the abort is
//! attributed to it.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::budget::{Party, ResourceBudget, SampleOracle, StepMeter};
use crate::error::{GameError, PartyFailure};
use crate::estimate::empirical_err;
use crate::seed::{rng_for, TrialRng};

/// A sampled `(D, h)` pair: the distribution is reachable through
/// [`Task::sample`], the error oracle through [`Task::error`]. Party code
/// only ever sees [`Task::Public`].
pub trait Task: Send + Sync {
    type Public: Send + Sync;

    fn public(&self) -> &Self::Public;

    /// One `(x, y)` draw from `D`.
    fn sample(&self, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>);

    /// The error oracle `h`: `true` means `y` is not a valid answer for `x`.
    fn error(&self, x: &[u8], y: &[u8]) -> bool;

    /// Sequential steps spent by the instance itself so far.
    fn nature_steps(&self) -> u64 {
        0
    }
}

/// A trained model. Inputs and outputs are canonical byte strings.
pub trait Model: Send + Sync {
    fn apply(&self, x: &[u8]) -> Vec<u8>;

    /// Canonical encoding of the model's representation.
    fn encode(&self) -> Vec<u8>;
}

/// Trainer-side state withheld from the challenger.
pub trait PrivateState: Send + Sync {
    fn encode(&self) -> Vec<u8>;
}

impl PrivateState for () {
    fn encode(&self) -> Vec<u8> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub q: usize,
}

impl GameParams {
    pub fn new(n: u32, epsilon: f64, delta: f64, q: usize) -> Result<Self, GameError> {
        let params = Self { n, epsilon, delta, q };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(GameError::InvalidParams(format!(
                "epsilon must lie in (0, 1/2), got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(GameError::InvalidParams(format!(
                "delta must lie in (0, 1/2), got {}",
                self.delta
            )));
        }
        if self.q == 0 {
            return Err(GameError::InvalidParams("q must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(GameError::InvalidParams("n must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a party may touch during its move.
pub struct PartyCtx<'a, T: Task> {
    pub public: &'a T::Public,
    pub oracle: SampleOracle<'a, T>,
    pub rng: TrialRng,
    pub steps: Arc<StepMeter>,
    pub params: GameParams,
    stats: BTreeMap<String, f64>,
}

impl<'a, T: Task> PartyCtx<'a, T> {
    pub fn new(task: &'a T, party: Party, allowance: Allowance, params: GameParams, seed: u64) -> Self {
        let label = format!("{party:?}");
        Self {
            public: task.public(),
            oracle: SampleOracle::new(
                task,
                party,
                allowance.samples,
                rng_for(seed, &format!("{label}/oracle")),
            ),
            rng: rng_for(seed, &label),
            steps: Arc::new(StepMeter::new(party, allowance.steps)),
            params,
            stats: BTreeMap::new(),
        }
    }

    /// Record a named statistic for the transcript (query counts, levels...).
    pub fn note(&mut self, key: &str, value: f64) {
        self.stats.insert(key.to_string(), value);
    }

    pub fn ledger(&self) -> ResourceBudget {
        ResourceBudget {
            samples_allowed: self.oracle.allowed(),
            samples_used: self.oracle.used(),
            steps_allowed: self.steps.allowed(),
            steps_used: self.steps.used(),
        }
    }

    /// Stats for the transcript. Step-metered parties also report how many
    /// language steps their meter's tap observed, for the conservation audit.
    fn take_stats(&mut self) -> BTreeMap<String, f64> {
        if self.steps.allowed().is_some() {
            let tapped = self.steps.tap().count() as f64;
            self.note("steps_tapped", tapped);
        }
        std::mem::take(&mut self.stats)
    }

    fn overran(&self) -> bool {
        self.oracle.refused() || self.steps.refused()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Nature,
    Attacker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Dbd,
    Dbm,
}

pub trait Trainer<T: Task>: Sync {
    type Model: Model;
    type Private: PrivateState;

    fn train(&self, ctx: &mut PartyCtx<'_, T>) -> Result<(Self::Model, Self::Private), PartyFailure>;
}

/// Nature and attackers share this interface; [`Challenger::origin`] tells
/// them apart.
pub trait Challenger<T: Task, M>: Sync {
    fn origin(&self) -> Origin;

    fn challenge(&self, f: &M, ctx: &mut PartyCtx<'_, T>) -> Result<Vec<Vec<u8>>, PartyFailure>;
}

/// What a detector returns. Detectors built on top of a mitigator expose the
/// simulated mitigator's answer in `inner` for auditing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub flag: bool,
    pub inner: Option<InnerMitigation>,
}

impl Detection {
    pub fn flag(flag: bool) -> Self {
        Self { flag, inner: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerMitigation {
    pub response: Vec<Vec<u8>>,
    pub flag: bool,
}

pub trait Detector<T: Task, M, P>: Sync {
    fn detect(&self, f: &M, private: &P, xs: &[Vec<u8>], ctx: &mut PartyCtx<'_, T>) -> Result<Detection, PartyFailure>;
}

pub trait Mitigator<T: Task, M, P>: Sync {
    fn mitigate(
        &self,
        f: &M,
        private: &P,
        xs: &[Vec<u8>],
        ctx: &mut PartyCtx<'_, T>,
    ) -> Result<(Vec<Vec<u8>>, bool), PartyFailure>;
}

/// The nature challenger: `q` i.i.d. inputs from the marginal `D_X`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nature;

impl<T: Task, M> Challenger<T, M> for Nature {
    fn origin(&self) -> Origin {
        Origin::Nature
    }

    fn challenge(&self, _f: &M, ctx: &mut PartyCtx<'_, T>) -> Result<Vec<Vec<u8>>, PartyFailure> {
        (0..ctx.params.q)
            .map(|_| ctx.oracle.draw().map(|(x, _)| x).map_err(PartyFailure::from))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allowance {
    pub samples: u64,
    pub steps: Option<u64>,
}

impl Allowance {
    pub fn samples(samples: u64) -> Self {
        Self { samples, steps: None }
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = Some(steps);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyBudgets {
    pub trainer: Allowance,
    pub challenger: Allowance,
    pub defender: Allowance,
}

#[derive(Debug, Clone, Copy)]
pub struct TrialSetup {
    pub trial_id: u64,
    pub seed: u64,
    pub params: GameParams,
    pub budgets: PartyBudgets,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledgers {
    pub trainer: ResourceBudget,
    pub challenger: ResourceBudget,
    pub defender: ResourceBudget,
    pub nature_steps: u64,
}

impl Ledgers {
    pub fn respected(&self) -> bool {
        self.trainer.respected() && self.challenger.respected() && self.defender.respected()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartyStats {
    pub trainer: BTreeMap<String, f64>,
    pub challenger: BTreeMap<String, f64>,
    pub defender: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub party: Party,
    pub reason: String,
}

/// Full record of one trial of either game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub trial_id: u64,
    pub seed: u64,
    pub game: GameKind,
    pub origin: Origin,
    pub model: Vec<u8>,
    pub private_state: Vec<u8>,
    pub challenge: Vec<Vec<u8>>,
    /// `f(x)` for every challenge input, computed by the harness.
    pub model_outputs: Vec<Vec<u8>>,
    /// Mitigation games only.
    pub response: Option<Vec<Vec<u8>>>,
    pub flag: Option<bool>,
    pub err_fx: Option<f64>,
    pub err_y: Option<f64>,
    pub inner: Option<InnerMitigation>,
    pub ledgers: Ledgers,
    pub stats: PartyStats,
    pub aborted: Option<AbortRecord>,
}

impl Transcript {
    fn empty(setup: &TrialSetup, game: GameKind, origin: Origin) -> Self {
        let zero = ResourceBudget::samples(0);
        Self {
            trial_id: setup.trial_id,
            seed: setup.seed,
            game,
            origin,
            model: Vec::new(),
            private_state: Vec::new(),
            challenge: Vec::new(),
            model_outputs: Vec::new(),
            response: None,
            flag: None,
            err_fx: None,
            err_y: None,
            inner: None,
            ledgers: Ledgers {
                trainer: zero,
                challenger: zero,
                defender: zero,
                nature_steps: 0,
            },
            stats: PartyStats::default(),
            aborted: None,
        }
    }

    pub fn aborted_by(&self) -> Option<Party> {
        self.aborted.as_ref().map(|a| a.party)
    }

    /// Soundness violation of the detection game at threshold `epsilon`:
    /// `err(x, f(x)) > epsilon` and the detector passed the batch. An abort
    /// by a defending party counts against the defense; an attacker abort
    /// does not.
    pub fn dbd_violation(&self, epsilon: f64) -> bool {
        match self.aborted_by() {
            Some(Party::Challenger) => false,
            Some(_) => true,
            None => self.flag == Some(false) && self.err_fx.is_some_and(|e| e > epsilon),
        }
    }

    /// Soundness violation of the mitigation game: `err(x, y) > epsilon`
    /// and `b = 0`.
    pub fn dbm_violation(&self, epsilon: f64) -> bool {
        match self.aborted_by() {
            Some(Party::Challenger) => false,
            Some(_) => true,
            None => self.flag == Some(false) && self.err_y.is_some_and(|e| e > epsilon),
        }
    }

    /// Completeness failure: anything other than a clean `b = 0`.
    pub fn flagged_or_failed(&self) -> bool {
        self.aborted.is_some() || self.flag != Some(false)
    }

    /// Hash of the canonical JSON encoding.
    pub fn digest(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("transcripts always serialize");
        Sha256::digest(bytes).into()
    }
}

/// Hash of a whole transcript stream, in order.
pub fn stream_digest<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> [u8; 32] {
    combine_digests(transcripts.into_iter().map(Transcript::digest))
}

/// The stream digest computed from per-transcript digests.
pub fn combine_digests(digests: impl IntoIterator<Item = [u8; 32]>) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for d in digests {
        hasher.update(d);
    }
    hasher.finalize().into()
}

fn abort(transcript: &mut Transcript, party: Party, failure: &PartyFailure) {
    transcript.aborted = Some(AbortRecord {
        party,
        reason: failure.to_string(),
    });
}

fn overrun(party: Party) -> PartyFailure {
    PartyFailure::abort(format!("{party:?} attempted to exceed its budget"))
}

struct Prelude<M, P> {
    transcript: Transcript,
    trained: Option<(M, P)>,
}

/// Rounds one and two, shared by both games.
fn play_prelude<T, Tr, C>(
    task: &T,
    trainer: &Tr,
    challenger: &C,
    setup: &TrialSetup,
    game: GameKind,
) -> Prelude<Tr::Model, Tr::Private>
where
    T: Task,
    Tr: Trainer<T>,
    C: Challenger<T, Tr::Model> + ?Sized,
{
    let mut transcript = Transcript::empty(setup, game, challenger.origin());

    let mut ctx = PartyCtx::new(task, Party::Trainer, setup.budgets.trainer, setup.params, setup.seed);
    let trained = trainer.train(&mut ctx);
    transcript.ledgers.trainer = ctx.ledger();
    transcript.stats.trainer = ctx.take_stats();
    let (f, private) = match trained {
        Ok(_) if ctx.overran() => {
            abort(&mut transcript, Party::Trainer, &overrun(Party::Trainer));
            return Prelude {
                transcript,
                trained: None,
            };
        }
        Ok(pair) => pair,
        Err(e) => {
            abort(&mut transcript, Party::Trainer, &e);
            return Prelude {
                transcript,
                trained: None,
            };
        }
    };
    transcript.model = f.encode();
    transcript.private_state = private.encode();

    let mut ctx = PartyCtx::new(
        task,
        Party::Challenger,
        setup.budgets.challenger,
        setup.params,
        setup.seed,
    );
    let challenge = challenger.challenge(&f, &mut ctx);
    transcript.ledgers.challenger = ctx.ledger();
    transcript.stats.challenger = ctx.take_stats();
    let xs = match challenge {
        Ok(_) if ctx.overran() => {
            abort(&mut transcript, Party::Challenger, &overrun(Party::Challenger));
            return Prelude {
                transcript,
                trained: Some((f, private)),
            };
        }
        Ok(xs) if xs.len() != setup.params.q => {
            let failure = PartyFailure::abort(format!(
                "challenge has {} inputs, expected {}",
                xs.len(),
                setup.params.q
            ));
            abort(&mut transcript, Party::Challenger, &failure);
            return Prelude {
                transcript,
                trained: Some((f, private)),
            };
        }
        Ok(xs) => xs,
        Err(e) => {
            abort(&mut transcript, Party::Challenger, &e);
            return Prelude {
                transcript,
                trained: Some((f, private)),
            };
        }
    };

    let fx: Vec<Vec<u8>> = xs.iter().map(|x| f.apply(x)).collect();
    transcript.err_fx = empirical_err(|x, y| task.error(x, y), &xs, &fx).ok();
    transcript.challenge = xs;
    transcript.model_outputs = fx;
    Prelude {
        transcript,
        trained: Some((f, private)),
    }
}

/// Detection game with several detectors facing the same trainer and
/// challenge. Since the detector moves last and owns its oracle stream, the
/// `i`-th transcript is exactly what [`run_dbd_trial`] would produce with
/// `detectors[i]` and the same setup.
pub fn run_dbd_trial_fanout<T, Tr, C>(
    task: &T,
    trainer: &Tr,
    challenger: &C,
    detectors: &[&dyn Detector<T, Tr::Model, Tr::Private>],
    setup: &TrialSetup,
) -> Vec<Transcript>
where
    T: Task,
    Tr: Trainer<T>,
    C: Challenger<T, Tr::Model> + ?Sized,
{
    let prelude = play_prelude(task, trainer, challenger, setup, GameKind::Dbd);
    let mut out = Vec::with_capacity(detectors.len());
    for detector in detectors {
        let mut transcript = prelude.transcript.clone();
        if let (None, Some((f, private))) = (&transcript.aborted, &prelude.trained) {
            let mut ctx = PartyCtx::new(task, Party::Defender, setup.budgets.defender, setup.params, setup.seed);
            let verdict = detector.detect(f, private, &transcript.challenge, &mut ctx);
            transcript.ledgers.defender = ctx.ledger();
            transcript.stats.defender = ctx.take_stats();
            match verdict {
                Ok(_) if ctx.overran() => abort(&mut transcript, Party::Defender, &overrun(Party::Defender)),
                Ok(d) => {
                    transcript.flag = Some(d.flag);
                    transcript.inner = d.inner;
                }
                Err(e) => abort(&mut transcript, Party::Defender, &e),
            }
        }
        transcript.ledgers.nature_steps = task.nature_steps();
        out.push(transcript);
    }
    out
}

/// One trial of the detection game.
pub fn run_dbd_trial<T, Tr, C, D>(
    task: &T,
    trainer: &Tr,
    challenger: &C,
    detector: &D,
    setup: &TrialSetup,
) -> Transcript
where
    T: Task,
    Tr: Trainer<T>,
    C: Challenger<T, Tr::Model> + ?Sized,
    D: Detector<T, Tr::Model, Tr::Private>,
{
    run_dbd_trial_fanout(
        task,
        trainer,
        challenger,
        &[detector as &dyn Detector<T, Tr::Model, Tr::Private>],
        setup,
    )
    .pop()
    .expect("one detector yields one transcript")
}

/// One trial of the mitigation game.
pub fn run_dbm_trial<T, Tr, C, Mi>(
    task: &T,
    trainer: &Tr,
    challenger: &C,
    mitigator: &Mi,
    setup: &TrialSetup,
) -> Transcript
where
    T: Task,
    Tr: Trainer<T>,
    C: Challenger<T, Tr::Model> + ?Sized,
    Mi: Mitigator<T, Tr::Model, Tr::Private> + ?Sized,
{
    let prelude = play_prelude(task, trainer, challenger, setup, GameKind::Dbm);
    let mut transcript = prelude.transcript;
    if let (None, Some((f, private))) = (&transcript.aborted, &prelude.trained) {
        let mut ctx = PartyCtx::new(task, Party::Defender, setup.budgets.defender, setup.params, setup.seed);
        let answer = mitigator.mitigate(f, private, &transcript.challenge, &mut ctx);
        transcript.ledgers.defender = ctx.ledger();
        transcript.stats.defender = ctx.take_stats();
        match answer {
            Ok(_) if ctx.overran() => abort(&mut transcript, Party::Defender, &overrun(Party::Defender)),
            Ok((ys, _)) if ys.len() != transcript.challenge.len() => {
                let failure = PartyFailure::abort(format!(
                    "response has {} outputs, expected {}",
                    ys.len(),
                    transcript.challenge.len()
                ));
                abort(&mut transcript, Party::Defender, &failure);
            }
            Ok((ys, b)) => {
                transcript.err_y = empirical_err(|x, y| task.error(x, y), &transcript.challenge, &ys).ok();
                transcript.response = Some(ys);
                transcript.flag = Some(b);
            }
            Err(e) => abort(&mut transcript, Party::Defender, &e),
        }
    }
    transcript.ledgers.nature_steps = task.nature_steps();
    transcript
}
