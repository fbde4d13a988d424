use std::collections::BTreeMap;

use defense_games::budget::Party;
use defense_games::game::{combine_digests, Origin};
use defense_games::RateEstimate;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::experiment::TranscriptLine;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerMax {
    pub samples_used: u64,
    pub steps_used: u64,
}

/// Aggregate view of a transcript stream. Rates that do not apply to the
/// challenger of the run (completeness for attackers, soundness for
/// nature) are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: u64,
    pub stream_digest: String,
    /// Batch error of the model at most `ε`, among nature runs.
    pub correctness: Option<RateEstimate>,
    pub completeness: Option<RateEstimate>,
    pub soundness_violation: Option<RateEstimate>,
    pub abort_rates: BTreeMap<String, RateEstimate>,
    pub mean_attacker_queries: Option<f64>,
    pub ledger_maxima: BTreeMap<String, LedgerMax>,
    pub config: Option<serde_json::Value>,
}

fn rate(lines: &[TranscriptLine], event: impl Fn(&TranscriptLine) -> bool) -> RateEstimate {
    RateEstimate::wilson(lines.iter().filter(|l| event(l)).count() as u64, lines.len() as u64)
}

impl Summary {
    pub fn from_lines(lines: &[TranscriptLine], config: Option<serde_json::Value>) -> Result<Self> {
        if lines.is_empty() {
            return Err(CliError::Runtime("no transcripts to summarize".into()));
        }
        let digests = lines
            .iter()
            .map(|l| {
                hex::decode(&l.digest)
                    .ok()
                    .and_then(|d| <[u8; 32]>::try_from(d).ok())
                    .ok_or_else(|| CliError::Runtime(format!("trial {}: malformed digest", l.trial_id)))
            })
            .collect::<Result<Vec<_>>>()?;

        let nature: Vec<TranscriptLine> = lines.iter().filter(|l| l.origin == Origin::Nature).cloned().collect();
        let attacker: Vec<TranscriptLine> = lines.iter().filter(|l| l.origin == Origin::Attacker).cloned().collect();
        let non_empty = |v: &[TranscriptLine]| (!v.is_empty()).then_some(());

        let mut abort_rates = BTreeMap::new();
        let mut ledger_maxima = BTreeMap::new();
        for (name, party) in [
            ("trainer", Party::Trainer),
            ("challenger", Party::Challenger),
            ("defender", Party::Defender),
        ] {
            abort_rates.insert(name.to_string(), rate(lines, |l| l.aborted_by() == Some(party)));
            let ledger = |l: &TranscriptLine| match party {
                Party::Trainer => l.ledgers.trainer,
                Party::Challenger => l.ledgers.challenger,
                _ => l.ledgers.defender,
            };
            let max = lines.iter().map(ledger).fold(LedgerMax::default(), |m, b| LedgerMax {
                samples_used: m.samples_used.max(b.samples_used),
                steps_used: m.steps_used.max(b.steps_used),
            });
            ledger_maxima.insert(name.to_string(), max);
        }
        let queries: Vec<f64> = attacker
            .iter()
            .filter_map(|l| l.stats.challenger.get("queries").copied())
            .collect();

        Ok(Self {
            trials: lines.len() as u64,
            stream_digest: hex::encode(combine_digests(digests)),
            correctness: non_empty(&nature).map(|_| {
                rate(&nature, |l| {
                    l.aborted_by() != Some(Party::Trainer) && l.err_fx.is_some_and(|e| e <= l.epsilon)
                })
            }),
            completeness: non_empty(&nature).map(|_| rate(&nature, |l| !l.completeness_failure())),
            soundness_violation: non_empty(&attacker).map(|_| rate(&attacker, TranscriptLine::violation)),
            abort_rates,
            mean_attacker_queries: (!queries.is_empty()).then(|| queries.iter().sum::<f64>() / queries.len() as f64),
            ledger_maxima,
            config,
        })
    }
}
