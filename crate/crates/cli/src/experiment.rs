use defense_games::budget::Party;
use defense_games::classification::{
    dbd_to_dbm, dbm_to_dbd, GuessingMitigator, OutsiderAttack, ToyClassificationInstance, ToyConfig, ToyDetector,
    ToyTrainer,
};
use defense_games::data::{DataConfig, DataInstance, DataMitigator, DataTrainer, SelfIterationAttack};
use defense_games::detectors::BaselineDetector;
use defense_games::game::{
    run_dbd_trial_fanout, AbortRecord, Challenger, Detector, GameKind, Ledgers, Mitigator, Nature, Origin, PartyStats,
    Task, Trainer, Transcript, TrialSetup,
};
use defense_games::parallel::map_indexed;
use defense_games::seed::trial_seed;
use defense_games::time::{TimeAttack, TimeConfig, TimeInstance, TimeMitigator, TimeTrainer};
use defense_games::{empirical_err, run_dbm_trial, Execution};
use serde::{Deserialize, Serialize};

use crate::config::{ChallengerKind, GameChoice, Resolved, TaskKind};
use crate::error::Result;

/// One line of the transcript stream. The first eight fields are the
/// fixed transcript schema; the rest are what the summary needs to be
/// recomputed from the stream alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub trial_id: u64,
    pub seed: u64,
    pub origin: Origin,
    pub flag: Option<bool>,
    pub err_fx: Option<f64>,
    pub err_y: Option<f64>,
    pub ledgers: Ledgers,
    pub aborted: Option<AbortRecord>,
    pub game: GameKind,
    pub epsilon: f64,
    pub violation_threshold: f64,
    /// Flag and batch error of the mitigator simulated inside a detector.
    pub inner_flag: Option<bool>,
    pub err_inner: Option<f64>,
    pub stats: PartyStats,
    /// Hex SHA-256 of the full transcript.
    pub digest: String,
}

impl TranscriptLine {
    pub fn new<T: Task>(task: &T, t: &Transcript, epsilon: f64, violation_threshold: f64) -> Self {
        let err_inner = t
            .inner
            .as_ref()
            .and_then(|inner| empirical_err(|x, y| task.error(x, y), &t.challenge, &inner.response).ok());
        Self {
            trial_id: t.trial_id,
            seed: t.seed,
            origin: t.origin,
            flag: t.flag,
            err_fx: t.err_fx,
            err_y: t.err_y,
            ledgers: t.ledgers.clone(),
            aborted: t.aborted.clone(),
            game: t.game,
            epsilon,
            violation_threshold,
            inner_flag: t.inner.as_ref().map(|i| i.flag),
            err_inner,
            stats: t.stats.clone(),
            digest: hex::encode(t.digest()),
        }
    }

    pub fn aborted_by(&self) -> Option<Party> {
        self.aborted.as_ref().map(|a| a.party)
    }

    /// An unflagged batch whose relevant error exceeds the threshold, or a
    /// defending party that aborted.
    pub fn violation(&self) -> bool {
        let err = match self.game {
            GameKind::Dbd => self.err_fx,
            GameKind::Dbm => self.err_y,
        };
        match self.aborted_by() {
            Some(Party::Challenger) => false,
            Some(_) => true,
            None => self.flag == Some(false) && err.is_some_and(|e| e > self.violation_threshold),
        }
    }

    pub fn completeness_failure(&self) -> bool {
        self.aborted.is_some() || self.flag != Some(false)
    }
}

impl Resolved {
    pub fn setup(&self, i: u64) -> TrialSetup {
        TrialSetup {
            trial_id: i,
            seed: trial_seed(self.seed, i),
            params: self.params,
            budgets: self.budgets,
        }
    }

    pub fn data_config(&self) -> DataConfig {
        DataConfig {
            n: self.params.n,
            cap: self.instance.cap,
            width: self.instance.width,
        }
    }

    pub fn time_config(&self) -> TimeConfig {
        TimeConfig {
            n: self.params.n,
            horizon: self.t_train,
            cap: self.instance.cap,
            width: self.instance.width,
            eta: self.instance.eta,
            ..TimeConfig::default()
        }
    }

    pub fn toy_config(&self) -> ToyConfig {
        ToyConfig {
            support: self.instance.support,
            weights: None,
        }
    }
}

enum Defense<'a, T: Task, M, P> {
    Detect(&'a dyn Detector<T, M, P>),
    Mitigate(&'a dyn Mitigator<T, M, P>),
}

fn play<T, Tr>(
    task: &T,
    trainer: &Tr,
    challenger: &dyn Challenger<T, Tr::Model>,
    defense: Defense<'_, T, Tr::Model, Tr::Private>,
    r: &Resolved,
    exec: Execution,
) -> Vec<TranscriptLine>
where
    T: Task,
    Tr: Trainer<T>,
{
    map_indexed(r.trials, exec, |i| {
        let setup = r.setup(i);
        let t = match &defense {
            Defense::Detect(d) => run_dbd_trial_fanout(task, trainer, challenger, &[*d], &setup)
                .pop()
                .expect("one detector yields one transcript"),
            Defense::Mitigate(m) => run_dbm_trial(task, trainer, challenger, *m, &setup),
        };
        TranscriptLine::new(task, &t, r.params.epsilon, r.violation_threshold)
    })
}

/// Generate the instance and play every trial of the experiment. Lines
/// come back in trial order whatever the execution mode.
pub fn run_experiment(r: &Resolved, exec: Execution) -> Result<Vec<TranscriptLine>> {
    let nature = r.challenger == ChallengerKind::Nature;
    Ok(match r.task {
        TaskKind::ToyClassification => {
            let inst = ToyClassificationInstance::generate(&r.toy_config(), r.instance_seed)?;
            let challenger: &dyn Challenger<_, _> = if nature { &Nature } else { &OutsiderAttack };
            let from_mitigator = dbm_to_dbd(GuessingMitigator, r.params.epsilon);
            let from_detector = dbd_to_dbm(ToyDetector);
            let defense = match (r.game, r.defender.as_str()) {
                (GameChoice::Dbd, "from-mitigator") => Defense::Detect(&from_mitigator),
                (GameChoice::Dbd, _) => Defense::Detect(&ToyDetector),
                (GameChoice::Dbm, "from-detector") => Defense::Mitigate(&from_detector),
                (GameChoice::Dbm, _) => Defense::Mitigate(&GuessingMitigator),
            };
            play(&inst, &ToyTrainer, challenger, defense, r, exec)
        }
        TaskKind::Ldata => {
            let inst = DataInstance::generate(r.data_config(), r.instance_seed)?;
            let challenger: &dyn Challenger<_, _> = if nature { &Nature } else { &SelfIterationAttack };
            let trainer = DataTrainer { k: r.k };
            let mitigator = DataMitigator { k: r.k };
            match r.game {
                GameChoice::Dbd => {
                    let detector = BaselineDetector::from_name(&r.defender, r.theta)?;
                    play(&inst, &trainer, challenger, Defense::Detect(&detector), r, exec)
                }
                GameChoice::Dbm => play(&inst, &trainer, challenger, Defense::Mitigate(&mitigator), r, exec),
            }
        }
        TaskKind::Ltime => {
            let inst = TimeInstance::generate(r.time_config(), r.instance_seed)?;
            let challenger: &dyn Challenger<_, _> = if nature { &Nature } else { &TimeAttack };
            let trainer = TimeTrainer { t: r.t_train };
            match r.game {
                GameChoice::Dbd => {
                    let detector = BaselineDetector::from_name(&r.defender, r.theta)?;
                    play(&inst, &trainer, challenger, Defense::Detect(&detector), r, exec)
                }
                GameChoice::Dbm => play(&inst, &trainer, challenger, Defense::Mitigate(&TimeMitigator), r, exec),
            }
        }
    })
}
