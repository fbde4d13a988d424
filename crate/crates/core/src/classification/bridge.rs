//! The two reductions between detection and mitigation for classification.

use crate::error::PartyFailure;
use crate::estimate::hamming;
use crate::game::{Detection, Detector, InnerMitigation, Mitigator, Model, PartyCtx, Task};

/// A mitigator that runs a detector and answers with the model's own
/// outputs. Draws nothing beyond what the detector draws.
#[derive(Debug, Clone, Copy)]
pub struct DetectorAsMitigator<D>(pub D);

pub fn dbd_to_dbm<D>(detector: D) -> DetectorAsMitigator<D> {
    DetectorAsMitigator(detector)
}

impl<T, M, P, D> Mitigator<T, M, P> for DetectorAsMitigator<D>
where
    T: Task,
    M: Model,
    D: Detector<T, M, P>,
{
    fn mitigate(
        &self,
        f: &M,
        private: &P,
        xs: &[Vec<u8>],
        ctx: &mut PartyCtx<'_, T>,
    ) -> Result<(Vec<Vec<u8>>, bool), PartyFailure> {
        let verdict = self.0.detect(f, private, xs, ctx)?;
        Ok((xs.iter().map(|x| f.apply(x)).collect(), verdict.flag))
    }
}

/// A detector that simulates a mitigator and flags when it flags or when
/// its answers disagree with the model on more than a `4ε` fraction.
#[derive(Debug, Clone, Copy)]
pub struct MitigatorAsDetector<Mi> {
    pub mitigator: Mi,
    pub epsilon: f64,
}

pub fn dbm_to_dbd<Mi>(mitigator: Mi, epsilon: f64) -> MitigatorAsDetector<Mi> {
    MitigatorAsDetector { mitigator, epsilon }
}

impl<Mi> MitigatorAsDetector<Mi> {
    pub fn threshold(&self) -> f64 {
        4.0 * self.epsilon
    }

    pub fn decide(&self, b: bool, ys: &[Vec<u8>], fx: &[Vec<u8>]) -> Result<bool, PartyFailure> {
        let d = hamming(ys, fx).map_err(|e| PartyFailure::abort(e.to_string()))?;
        Ok(b || d > self.threshold())
    }
}

impl<T, M, P, Mi> Detector<T, M, P> for MitigatorAsDetector<Mi>
where
    T: Task,
    M: Model,
    Mi: Mitigator<T, M, P>,
{
    fn detect(&self, f: &M, private: &P, xs: &[Vec<u8>], ctx: &mut PartyCtx<'_, T>) -> Result<Detection, PartyFailure> {
        let (ys, b) = self.mitigator.mitigate(f, private, xs, ctx)?;
        let fx: Vec<Vec<u8>> = xs.iter().map(|x| f.apply(x)).collect();
        let flag = self.decide(b, &ys, &fx)?;
        Ok(Detection {
            flag,
            inner: Some(InnerMitigation { response: ys, flag: b }),
        })
    }
}
