//! Library side of the `dgames` binary: configuration schema, instance
//! files, the experiment runner and summaries.

pub mod config;
pub mod error;
pub mod experiment;
pub mod files;
pub mod summary;

pub use config::{ChallengerKind, ExperimentConfig, GameChoice, Resolved, TaskKind};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, TranscriptLine};
pub use summary::Summary;
