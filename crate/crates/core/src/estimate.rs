//! Batch error measures and Monte-Carlo rate estimation.

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::{Model, Task};
use crate::parallel::{map_indexed, Execution};
use crate::seed::rng_for;

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

/// `(1/q) Σ h(x_i, y_i)`.
pub fn empirical_err<H>(h: H, xs: &[Vec<u8>], ys: &[Vec<u8>]) -> Result<f64, GameError>
where
    H: Fn(&[u8], &[u8]) -> bool,
{
    if xs.len() != ys.len() {
        return Err(GameError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(GameError::EmptyBatch);
    }
    let wrong = xs.iter().zip(ys).filter(|(x, y)| h(x, y)).count();
    Ok(wrong as f64 / xs.len() as f64)
}

/// Normalized Hamming distance over canonical byte encodings.
pub fn hamming(ys: &[Vec<u8>], ys2: &[Vec<u8>]) -> Result<f64, GameError> {
    if ys.len() != ys2.len() {
        return Err(GameError::LengthMismatch {
            left: ys.len(),
            right: ys2.len(),
        });
    }
    if ys.is_empty() {
        return Err(GameError::EmptyBatch);
    }
    let differing = ys.iter().zip(ys2).filter(|(a, b)| a != b).count();
    Ok(differing as f64 / ys.len() as f64)
}

/// A success rate with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

impl RateEstimate {
    pub fn wilson(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "rate estimate needs at least one trial");
        assert!(successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        // Clamp so that rounding never pushes the bounds past the point.
        let low = (center - half).clamp(0.0, p);
        let high = (center + half).clamp(p, 1.0);
        Self {
            successes,
            trials,
            point: p,
            low,
            high,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.high - self.low) / 2.0
    }

    /// `point ≤ bound + half_width`: the acceptance rule for rate ceilings.
    pub fn within_ceiling(&self, bound: f64) -> bool {
        self.point <= bound + self.half_width()
    }
}

/// Run `trials` independent trials and estimate how often `predicate`
/// holds. Trial `i` receives `i`; seeding is the generator's business.
pub fn evaluate_rates<R, G, P>(
    trials: u64,
    exec: Execution,
    generate: G,
    predicate: P,
) -> Result<RateEstimate, GameError>
where
    R: Send,
    G: Fn(u64) -> R + Sync + Send,
    P: Fn(&R) -> bool,
{
    if trials < 30 {
        return Err(GameError::TooFewTrials { min: 30, got: trials });
    }
    let outcomes = map_indexed(trials, exec, generate);
    let successes = outcomes.iter().filter(|r| predicate(r)).count() as u64;
    Ok(RateEstimate::wilson(successes, trials))
}

/// Monte-Carlo estimate of `err(f) = E_{x ← D_X}[h(x, f(x))]`. Harness-side
/// evaluation, so the draws are not metered.
pub fn estimate_model_err<T: Task, M: Model + ?Sized>(
    task: &T,
    f: &M,
    draws: u64,
    seed: u64,
) -> Result<RateEstimate, GameError> {
    if draws == 0 {
        return Err(GameError::InvalidParams("need at least one draw".into()));
    }
    let mut rng = rng_for(seed, "model-err");
    let wrong = (0..draws)
        .filter(|_| {
            let (x, _) = task.sample(&mut rng);
            task.error(&x, &f.apply(&x))
        })
        .count() as u64;
    Ok(RateEstimate::wilson(wrong, draws))
}
