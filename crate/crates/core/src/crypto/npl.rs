//! Sequential-work language: a SHA-256 hash chain. Deciding an instance of
//! difficulty `t` means iterating the step function `t` times from the
//! seeded start state; every invocation is recorded on a [`StepTap`].

use rand::RngCore;

use super::{random_bytes, sha256, Digest};
use crate::budget::{StepMeter, StepTap};
use crate::error::BudgetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NplInstance {
    pub seed: [u8; 16],
    pub difficulty: u64,
}

pub fn npl_sample<R: RngCore>(difficulty: u64, rng: &mut R) -> NplInstance {
    assert!(difficulty >= 1, "difficulty must be at least 1");
    NplInstance {
        seed: random_bytes(rng),
        difficulty,
    }
}

pub fn npl_start(seed: &[u8]) -> Digest {
    sha256(&[b"npl-start", seed])
}

/// One application of the step function.
pub fn npl_step(state: &Digest, tap: &StepTap) -> Digest {
    tap.record();
    sha256(&[state])
}

/// Run the chain for the instance's difficulty and output the low bit of
/// the final state. Each step is charged to `meter` before it runs.
pub fn npl_decide(instance: &NplInstance, meter: &StepMeter) -> Result<bool, BudgetError> {
    let mut state = npl_start(&instance.seed);
    for _ in 0..instance.difficulty {
        meter.charge(1)?;
        state = npl_step(&state, meter.tap());
    }
    Ok(state[31] & 1 == 1)
}
