//! Baseline detectors for the two separation tasks. They see only what any
//! party sees: the public parameters and the challenge batch.

use crate::error::{GameError, PartyFailure};
use crate::game::{Detection, Detector, PartyCtx, Task};

/// What a detector can learn about one input from public information.
pub trait InputView {
    /// The input parses as a payload of the task.
    fn well_formed(&self, x: &[u8]) -> bool;

    /// Whether the input is in encrypted form. Malformed inputs are not.
    fn encrypted(&self, x: &[u8]) -> bool;

    /// Level of a clear input; `None` for encrypted or malformed inputs.
    fn clear_level(&self, x: &[u8]) -> Option<u64>;

    /// Full validity of a clear input's proofs. Encrypted inputs pass.
    fn publicly_valid(&self, x: &[u8]) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineDetector {
    NeverFlag,
    /// Flags malformed inputs and clear inputs whose proofs do not verify.
    FormatCheck,
    /// Flags clear inputs above the given level.
    LevelThreshold(u64),
    /// Flags batches whose encrypted fraction is further than `margin` from
    /// one half. `None` uses three standard deviations, `1.5/√q`.
    FrequencyTest {
        margin: Option<f64>,
    },
}

impl BaselineDetector {
    pub const NAMES: [&'static str; 4] = ["never-flag", "format-check", "level-threshold", "frequency-test"];

    /// Look up a detector by name; `theta` parameterizes `level-threshold`.
    pub fn from_name(name: &str, theta: Option<u64>) -> Result<Self, GameError> {
        match name {
            "never-flag" => Ok(Self::NeverFlag),
            "format-check" => Ok(Self::FormatCheck),
            "level-threshold" => theta
                .map(Self::LevelThreshold)
                .ok_or_else(|| GameError::InvalidParams("level-threshold needs theta".into())),
            "frequency-test" => Ok(Self::FrequencyTest { margin: None }),
            other => Err(GameError::InvalidParams(format!(
                "unknown detector {other:?}; expected one of {:?}",
                Self::NAMES
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NeverFlag => "never-flag",
            Self::FormatCheck => "format-check",
            Self::LevelThreshold(_) => "level-threshold",
            Self::FrequencyTest { .. } => "frequency-test",
        }
    }

    pub fn flags<V: InputView + ?Sized>(&self, view: &V, xs: &[Vec<u8>]) -> bool {
        match *self {
            Self::NeverFlag => false,
            Self::FormatCheck => xs.iter().any(|x| !view.well_formed(x) || !view.publicly_valid(x)),
            Self::LevelThreshold(theta) => xs.iter().any(|x| view.clear_level(x).is_some_and(|k| k > theta)),
            Self::FrequencyTest { margin } => {
                if xs.is_empty() {
                    return false;
                }
                let q = xs.len() as f64;
                let margin = margin.unwrap_or(1.5 / q.sqrt());
                let enc = xs.iter().filter(|x| view.encrypted(x)).count() as f64 / q;
                (enc - 0.5).abs() > margin
            }
        }
    }
}

impl<T, M, P> Detector<T, M, P> for BaselineDetector
where
    T: Task,
    T::Public: InputView,
{
    fn detect(
        &self,
        _f: &M,
        _private: &P,
        xs: &[Vec<u8>],
        ctx: &mut PartyCtx<'_, T>,
    ) -> Result<Detection, PartyFailure> {
        Ok(Detection::flag(self.flags(ctx.public, xs)))
    }
}
