//! A finite weighted lookup task with one valid label per input.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::crypto::codec::Writer;
use crate::crypto::sha256;
use crate::error::{GameError, PartyFailure};
use crate::game::{Challenger, Detection, Detector, Model, Origin, PartyCtx, PrivateState, Task, Trainer};
use crate::seed::{rng_for, TrialRng};

pub const INPUT_LEN: usize = 2;
pub const DEFAULT_LABEL: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub support: usize,
    /// Per-support-element probabilities; `None` is uniform.
    pub weights: Option<Vec<f64>>,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            support: 8,
            weights: None,
        }
    }
}

/// Nothing about the instance is public beyond the input format.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyPublic;

#[derive(Debug, Clone)]
pub struct ToyClassificationInstance {
    support: Vec<[u8; INPUT_LEN]>,
    labels: Vec<u8>,
    weights: Vec<f64>,
    index: BTreeMap<[u8; INPUT_LEN], usize>,
    sampler: WeightedIndex<f64>,
    salt: [u8; 16],
}

impl ToyClassificationInstance {
    pub fn generate(config: &ToyConfig, seed: u64) -> Result<Self, GameError> {
        let m = config.support;
        if m == 0 || m > 1 << (8 * INPUT_LEN) {
            return Err(GameError::InvalidParams(format!("support size {m} out of range")));
        }
        let weights = match &config.weights {
            None => vec![1.0 / m as f64; m],
            Some(w) if w.len() != m => {
                return Err(GameError::InvalidParams(format!(
                    "{} weights for support of size {m}",
                    w.len()
                )))
            }
            Some(w) => w.clone(),
        };
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(GameError::InvalidParams(
                "weights must be non-negative and sum to 1".into(),
            ));
        }
        let sampler = WeightedIndex::new(&weights).map_err(|e| GameError::InvalidParams(e.to_string()))?;
        let mut rng = rng_for(seed, "toy-instance");
        let support: Vec<[u8; INPUT_LEN]> = sample_indices(&mut rng, 1 << (8 * INPUT_LEN), m)
            .into_iter()
            .map(|i| (i as u16).to_be_bytes())
            .collect();
        let labels = (0..m).map(|_| rng.gen::<bool>() as u8).collect();
        let index = support.iter().enumerate().map(|(i, x)| (*x, i)).collect();
        Ok(Self {
            support,
            labels,
            weights,
            index,
            sampler,
            salt: rng.gen(),
        })
    }

    pub fn support(&self) -> &[[u8; INPUT_LEN]] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The one valid label of `x`. Off the support it is a salted hash bit.
    pub fn label(&self, x: &[u8]) -> u8 {
        let on_support = <[u8; INPUT_LEN]>::try_from(x).ok().and_then(|k| self.index.get(&k));
        match on_support {
            Some(&i) => self.labels[i],
            None => sha256(&[&self.salt, x])[31] & 1,
        }
    }

    pub fn in_support(&self, x: &[u8]) -> bool {
        <[u8; INPUT_LEN]>::try_from(x).is_ok_and(|k| self.index.contains_key(&k))
    }
}

impl Task for ToyClassificationInstance {
    type Public = ToyPublic;

    fn public(&self) -> &ToyPublic {
        &ToyPublic
    }

    fn sample(&self, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>) {
        let i = self.sampler.sample(rng);
        (self.support[i].to_vec(), vec![self.labels[i]])
    }

    fn error(&self, x: &[u8], y: &[u8]) -> bool {
        y != [self.label(x)]
    }
}

/// Memorized labels, answering [`DEFAULT_LABEL`] elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ToyModel {
    pub table: BTreeMap<Vec<u8>, u8>,
}

impl Model for ToyModel {
    fn apply(&self, x: &[u8]) -> Vec<u8> {
        vec![self.table.get(x).copied().unwrap_or(DEFAULT_LABEL)]
    }

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new().u64(self.table.len() as u64);
        for (x, y) in &self.table {
            w = w.field(x).raw(&[*y]);
        }
        w.finish()
    }
}

/// Inputs the trainer has seen.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ToyPrivate {
    pub seen: BTreeSet<Vec<u8>>,
}

impl PrivateState for ToyPrivate {
    fn encode(&self) -> Vec<u8> {
        self.seen.iter().fold(Writer::new(), |w, x| w.field(x)).finish()
    }
}

/// Spends the whole sample allowance memorizing pairs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyTrainer;

pub fn toy_train<T: Task>(ctx: &mut PartyCtx<'_, T>) -> Result<(ToyModel, ToyPrivate), PartyFailure> {
    let mut model = ToyModel::default();
    let mut private = ToyPrivate::default();
    while ctx.oracle.remaining() > 0 {
        let (x, y) = ctx.oracle.draw()?;
        if let [label] = y[..] {
            model.table.insert(x.clone(), label);
        }
        private.seen.insert(x);
    }
    ctx.note("distinct_inputs", private.seen.len() as f64);
    Ok((model, private))
}

impl Trainer<ToyClassificationInstance> for ToyTrainer {
    type Model = ToyModel;
    type Private = ToyPrivate;

    fn train(&self, ctx: &mut PartyCtx<'_, ToyClassificationInstance>) -> Result<(ToyModel, ToyPrivate), PartyFailure> {
        toy_train(ctx)
    }
}

fn outsider_fraction(private: &ToyPrivate, xs: &[Vec<u8>]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().filter(|x| !private.seen.contains(*x)).count() as f64 / xs.len() as f64
}

/// `1` iff more than a `4ε` fraction of the batch was never seen in training.
pub fn toy_detect(private: &ToyPrivate, xs: &[Vec<u8>], epsilon: f64) -> bool {
    outsider_fraction(private, xs) > 4.0 * epsilon
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ToyDetector;

impl<T: Task> Detector<T, ToyModel, ToyPrivate> for ToyDetector {
    fn detect(
        &self,
        _f: &ToyModel,
        private: &ToyPrivate,
        xs: &[Vec<u8>],
        ctx: &mut PartyCtx<'_, T>,
    ) -> Result<Detection, PartyFailure> {
        Ok(Detection::flag(toy_detect(private, xs, ctx.params.epsilon)))
    }
}

/// A mitigator that is not built from a detector: it answers memorized
/// inputs with `f`, guesses a random label on the rest, and flags when the
/// unseen fraction exceeds `4ε`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GuessingMitigator;

impl<T: Task> crate::game::Mitigator<T, ToyModel, ToyPrivate> for GuessingMitigator {
    fn mitigate(
        &self,
        f: &ToyModel,
        private: &ToyPrivate,
        xs: &[Vec<u8>],
        ctx: &mut PartyCtx<'_, T>,
    ) -> Result<(Vec<Vec<u8>>, bool), PartyFailure> {
        let ys = xs
            .iter()
            .map(|x| {
                if private.seen.contains(x) {
                    f.apply(x)
                } else {
                    vec![ctx.rng.gen::<bool>() as u8]
                }
            })
            .collect();
        Ok((ys, toy_detect(private, xs, ctx.params.epsilon)))
    }
}

/// Places a uniformly random number `u ∈ {0, …, q}` of off-support inputs
/// in the batch and fills the rest with natural draws.
#[derive(Debug, Clone, Copy, Default)]
pub struct OutsiderAttack;

impl<M> Challenger<ToyClassificationInstance, M> for OutsiderAttack {
    fn origin(&self) -> Origin {
        Origin::Attacker
    }

    fn challenge(
        &self,
        _f: &M,
        ctx: &mut PartyCtx<'_, ToyClassificationInstance>,
    ) -> Result<Vec<Vec<u8>>, PartyFailure> {
        let q = ctx.params.q;
        let outsiders = ctx.rng.gen_range(0..=q);
        let mut natural = Vec::with_capacity(q - outsiders);
        for _ in outsiders..q {
            natural.push(ctx.oracle.draw()?.0);
        }
        // The attacker does not know the support; an input it has not drawn
        // is off-support with overwhelming probability for small supports.
        let mut batch = natural.clone();
        while batch.len() < q {
            let x: [u8; INPUT_LEN] = ctx.rng.gen();
            if !natural.iter().any(|n| n[..] == x) {
                batch.push(x.to_vec());
            }
        }
        ctx.note("outsiders", outsiders as f64);
        Ok(batch)
    }
}
