//! Simulation framework for defense-by-detection (DbD) and
//! defense-by-mitigation (DbM) games against adversarial inputs.
//!
//! The crate is organised around three learning tasks:
//!
//! * [`classification`]: a finite weighted lookup task, plus the two
//!   adapters that turn a detector into a mitigator and back.
//! * [`data`]: a generative task whose hardness levels are backed by
//!   counted signatures and succinct proofs, together with the level-`K`
//!   trainer, the self-iteration attack and the sample-efficient mitigator.
//! * [`time`]: the step-bounded analogue, where hardness levels are backed by
//!   incrementally verifiable runs of a sequential hash chain.
//!
//! All three plug into the generic game runners in [`game`], which meter
//! every party through [`budget`] and record a [`game::Transcript`] per
//! trial. [`estimate`] turns batches of transcripts into rate estimates with
//! Wilson intervals. Trials fan out over rayon when the `parallel` feature is
//! enabled (the default); see [`parallel`].

pub mod budget;
pub mod classification;
pub mod crypto;
pub mod data;
pub mod detectors;
pub mod error;
pub mod estimate;
pub mod game;
pub mod parallel;
pub mod seed;
pub mod time;

pub use budget::{Party, ResourceBudget, SampleOracle, StepMeter};
pub use error::{GameError, PartyFailure};
pub use estimate::{empirical_err, evaluate_rates, hamming, RateEstimate};
pub use game::{
    run_dbd_trial, run_dbm_trial, Challenger, Detector, GameParams, Mitigator, Model, Origin, Task, Trainer, Transcript,
};
pub use parallel::Execution;
