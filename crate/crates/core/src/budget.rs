//! Per-party resource accounting.
//!
//! Parties never touch a task instance directly: sample access goes through
//! a [`SampleOracle`] and sequential work through a [`StepMeter`]. Both
//! refuse to go past their allowance and remember that they were asked to,
//! so a party that swallows the error is still caught by the runner.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::BudgetError;
use crate::game::Task;
use crate::seed::TrialRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Trainer,
    Challenger,
    Defender,
    /// Instance-internal work (sampling, oracle evaluation); never budgeted.
    Nature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Samples,
    Steps,
}

/// Allowance and usage for one party in one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceBudget {
    pub samples_allowed: u64,
    pub samples_used: u64,
    pub steps_allowed: Option<u64>,
    pub steps_used: u64,
}

impl ResourceBudget {
    pub fn samples(allowed: u64) -> Self {
        Self {
            samples_allowed: allowed,
            samples_used: 0,
            steps_allowed: None,
            steps_used: 0,
        }
    }

    pub fn with_steps(mut self, allowed: u64) -> Self {
        self.steps_allowed = Some(allowed);
        self
    }

    /// True when usage never went past either allowance.
    pub fn respected(&self) -> bool {
        self.samples_used <= self.samples_allowed && self.steps_allowed.is_none_or(|s| self.steps_used <= s)
    }
}

/// Metered i.i.d. access to a task's distribution.
pub struct SampleOracle<'a, T: Task + ?Sized> {
    task: &'a T,
    party: Party,
    allowed: u64,
    used: u64,
    refused: bool,
    rng: TrialRng,
}

impl<'a, T: Task + ?Sized> SampleOracle<'a, T> {
    pub fn new(task: &'a T, party: Party, allowed: u64, rng: TrialRng) -> Self {
        Self {
            task,
            party,
            allowed,
            used: 0,
            refused: false,
            rng,
        }
    }

    /// One `(x, y)` pair from the task distribution.
    pub fn draw(&mut self) -> Result<(Vec<u8>, Vec<u8>), BudgetError> {
        if self.used >= self.allowed {
            self.refused = true;
            return Err(BudgetError {
                party: self.party,
                resource: Resource::Samples,
                allowed: self.allowed,
            });
        }
        self.used += 1;
        Ok(self.task.sample(&mut self.rng))
    }

    pub fn remaining(&self) -> u64 {
        self.allowed - self.used
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn allowed(&self) -> u64 {
        self.allowed
    }

    /// Whether a draw was ever refused.
    pub fn refused(&self) -> bool {
        self.refused
    }
}

/// Instrumented counter bumped by every invocation of the sequential step
/// function. Kept apart from the ledger so the two can be audited against
/// each other.
#[derive(Debug, Default)]
pub struct StepTap(AtomicU64);

impl StepTap {
    pub fn record(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn count(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Step ledger for one party. Shared (`Arc`) because homomorphic
/// evaluation may run a party's circuit on the oracle side.
#[derive(Debug)]
pub struct StepMeter {
    party: Party,
    allowed: Option<u64>,
    used: AtomicU64,
    refused: AtomicBool,
    tap: StepTap,
}

impl StepMeter {
    pub fn new(party: Party, allowed: Option<u64>) -> Self {
        Self {
            party,
            allowed,
            used: AtomicU64::new(0),
            refused: AtomicBool::new(false),
            tap: StepTap::default(),
        }
    }

    pub fn unbounded(party: Party) -> Self {
        Self::new(party, None)
    }

    /// Reserve `n` steps. Fails, charging nothing, if that would exceed the
    /// allowance.
    pub fn charge(&self, n: u64) -> Result<(), BudgetError> {
        let result = self.used.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
            let next = used.checked_add(n)?;
            match self.allowed {
                Some(limit) if next > limit => None,
                _ => Some(next),
            }
        });
        match result {
            Ok(_) => Ok(()),
            Err(_) => {
                self.refused.store(true, Ordering::SeqCst);
                Err(BudgetError {
                    party: self.party,
                    resource: crate::budget::Resource::Steps,
                    allowed: self.allowed.unwrap_or(u64::MAX),
                })
            }
        }
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn allowed(&self) -> Option<u64> {
        self.allowed
    }

    pub fn refused(&self) -> bool {
        self.refused.load(Ordering::SeqCst)
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn tap(&self) -> &StepTap {
        &self.tap
    }
}
