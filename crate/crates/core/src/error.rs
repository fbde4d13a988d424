use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{Party, Resource};

/// Contract violations raised by the framework itself (bad arguments,
/// malformed configurations). Party misbehaviour is a [`PartyFailure`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("batch length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("at least {min} trials required, got {got}")]
    TooFewTrials { min: u64, got: u64 },
    #[error("level must be positive")]
    ZeroLevel,
    #[error("capability required: {0}")]
    Capability(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[error("{party:?} exceeded its {resource:?} budget of {allowed}")]
pub struct BudgetError {
    pub party: Party,
    pub resource: Resource,
    pub allowed: u64,
}

/// Why a party could not complete its move.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartyFailure {
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("aborted: {0}")]
    Abort(String),
}

impl PartyFailure {
    pub fn abort(reason: impl Into<String>) -> Self {
        PartyFailure::Abort(reason.into())
    }
}
