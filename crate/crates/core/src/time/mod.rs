//! The time-complexity separation task.
//!
//! Inputs are points on a public hash chain, `(t, c_t, π_t)`, where `π_t`
//! is an incremental proof that `c_t` is `t` steps from the start. A valid
//! answer sits at least `⌊√t⌋` steps further along. A model trained for
//! `T` steps answers up to `T`; the mitigator earns its answer by running
//! the chain `⌊√t⌋` more steps. As in the data task, half the inputs are
//! encrypted.

pub mod attack;
pub mod audit;
pub mod instance;
pub mod mitigator;
pub mod model;
pub mod payload;

pub use attack::TimeAttack;
pub use audit::{sequential_reach, step_conservation};
pub use instance::{time_next_level, TimeConfig, TimeInstance, TimePublic};
pub use mitigator::TimeMitigator;
pub use model::{snapshot_steps, Snapshots, TimeModel, TimePrivate, TimeTrainer};
pub use payload::{TimeInput, TimePayload, TAG_TIME_CLEAR, TAG_TIME_ENC};

use crate::detectors::InputView;
use payload::decode_input;

impl InputView for TimePublic {
    fn well_formed(&self, x: &[u8]) -> bool {
        decode_input(self.widths, x).is_some()
    }

    fn encrypted(&self, x: &[u8]) -> bool {
        matches!(decode_input(self.widths, x), Some(TimeInput::Enc(_)))
    }

    fn clear_level(&self, x: &[u8]) -> Option<u64> {
        match decode_input(self.widths, x)? {
            TimeInput::Clear(p) => Some(p.t),
            TimeInput::Enc(_) => None,
        }
    }

    fn publicly_valid(&self, x: &[u8]) -> bool {
        match decode_input(self.widths, x) {
            Some(TimeInput::Clear(p)) => self.payload_valid(&p),
            Some(TimeInput::Enc(_)) => true,
            None => false,
        }
    }
}
