//! The sample-complexity separation task.
//!
//! An input is a signature token with a claimed hardness level `k` and a
//! succinct proof that its author held `k` distinct signatures. A valid
//! answer echoes the token at level at least `k + ⌊√k⌋` with a proof for
//! the new level. Half of the distribution is the same data encrypted under
//! a random identity, bundled with a key for another random identity.
//!
//! Answering up to level `K` takes about `K` samples, so an attacker that
//! iterates the model on itself finds the frontier quickly; the encrypted
//! half hides that frontier from any detector, while a mitigator with
//! `O(√K)` extra samples can answer it.

pub mod attack;
pub mod instance;
pub mod level;
pub mod mitigator;
pub mod model;
pub mod payload;

pub use attack::{SelfIterationAttack, DEFAULT_ATTACK_SAMPLES};
pub use instance::{DataConfig, DataInstance, DataPublic, Form};
pub use level::{isqrt, next_level, LevelLaw};
pub use mitigator::DataMitigator;
pub use model::{training_levels, DataModel, DataTrainer, ProofTable, TrainerPrivate};
pub use payload::{ClearPayload, EncPayload, Payload, Widths, BOTTOM};

use crate::detectors::InputView;

impl InputView for DataPublic {
    fn well_formed(&self, x: &[u8]) -> bool {
        self.widths.decode(x).is_some()
    }

    fn encrypted(&self, x: &[u8]) -> bool {
        matches!(self.widths.decode(x), Some(Payload::Enc(_)))
    }

    fn clear_level(&self, x: &[u8]) -> Option<u64> {
        match self.widths.decode(x)? {
            Payload::Clear(c) => Some(c.level),
            Payload::Enc(_) => None,
        }
    }

    fn publicly_valid(&self, x: &[u8]) -> bool {
        match self.widths.decode(x) {
            Some(Payload::Clear(c)) => self.clear_valid(&c),
            Some(Payload::Enc(_)) => true,
            None => false,
        }
    }
}
