//! Post-hoc audits of time-task transcripts.

use super::instance::TimeInstance;
use crate::game::{Origin, Task, Transcript};

/// Every step-metered party reported as many tapped language steps as its
/// ledger charged.
pub fn step_conservation(t: &Transcript) -> bool {
    [
        (&t.ledgers.trainer, &t.stats.trainer),
        (&t.ledgers.challenger, &t.stats.challenger),
        (&t.ledgers.defender, &t.stats.defender),
    ]
    .into_iter()
    .filter(|(ledger, _)| ledger.steps_allowed.is_some())
    .all(|(ledger, stats)| stats.get("steps_tapped").copied() == Some(ledger.steps_used as f64))
}

/// No valid payload in the transcript sits at a level beyond the steps
/// spent by the parties that could have produced it. Reads encrypted
/// payloads, so this needs the instance secrets.
pub fn sequential_reach(inst: &TimeInstance, t: &Transcript) -> bool {
    let public = inst.public();
    let trainer = t.ledgers.trainer.steps_used;
    let source = match t.origin {
        Origin::Nature => t.ledgers.nature_steps,
        // Draws hand the attacker nature's work, up to the level cap.
        Origin::Attacker if t.ledgers.challenger.samples_used > 0 => {
            (trainer + t.ledgers.challenger.steps_used).max(public.law.cap)
        }
        Origin::Attacker => trainer + t.ledgers.challenger.steps_used,
    };
    let valid_level = |p: Option<super::payload::TimePayload>| p.filter(|p| public.payload_valid(p)).map(|p| p.t);
    t.challenge.iter().enumerate().all(|(i, x)| {
        let xl = valid_level(inst.open(x));
        let x_ok = xl.is_none_or(|l| l <= source);
        let fx_ok = t
            .model_outputs
            .get(i)
            .and_then(|y| valid_level(inst.open_response(x, y)))
            .is_none_or(|l| l <= trainer.max(xl.unwrap_or(0)));
        let y_ok = t
            .response
            .as_ref()
            .and_then(|ys| ys.get(i))
            .and_then(|y| valid_level(inst.open_response(x, y)))
            .is_none_or(|l| l <= xl.unwrap_or(0) + t.ledgers.defender.steps_used);
        x_ok && fx_ok && y_ok
    })
}
