//! Hardness-level arithmetic shared by both separation tasks.

use rand::Rng;

use crate::error::GameError;

/// `⌊√k⌋`, exact for every `u64`.
pub fn isqrt(k: u64) -> u64 {
    let mut r = (k as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > k) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= k) {
        r += 1;
    }
    r
}

/// The level a valid answer to a level-`k` input must reach: `k + ⌊√k⌋`.
pub fn next_level(k: u64) -> Result<u64, GameError> {
    if k == 0 {
        return Err(GameError::ZeroLevel);
    }
    Ok(k + isqrt(k))
}

/// `Pr[k] = 2^-k` for `1 ≤ k < cap`, with the remaining mass `2^-(cap-1)`
/// on `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelLaw {
    pub cap: u64,
}

impl LevelLaw {
    pub const DEFAULT_CAP: u64 = 512;

    pub fn new(cap: u64) -> Result<Self, GameError> {
        if cap < 8 {
            return Err(GameError::InvalidParams(format!(
                "level cap must be at least 8, got {cap}"
            )));
        }
        Ok(Self { cap })
    }

    pub fn probability(&self, k: u64) -> f64 {
        match k {
            0 => 0.0,
            k if k < self.cap => 0.5f64.powi(k as i32),
            k if k == self.cap => 0.5f64.powi((self.cap - 1) as i32),
            _ => 0.0,
        }
    }

    /// Mass on levels strictly above `k`.
    pub fn tail_above(&self, k: u64) -> f64 {
        if k >= self.cap {
            0.0
        } else {
            0.5f64.powi(k as i32)
        }
    }

    /// Count fair coin flips: each heads moves one level up, until tails or
    /// the cap.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut k = 1;
        while k < self.cap && rng.gen::<bool>() {
            k += 1;
        }
        k
    }
}

impl Default for LevelLaw {
    fn default() -> Self {
        Self { cap: Self::DEFAULT_CAP }
    }
}
