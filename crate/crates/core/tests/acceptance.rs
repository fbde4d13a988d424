//! Acceptance runner. Prints one PASS/FAIL line per criterion, followed by
//! the measurements behind it, and exits non-zero if any criterion fails.
//! Runs without the libtest harness so the report is always shown.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use defense_games::budget::{Party, StepMeter};
use defense_games::classification::{
    dbd_to_dbm, dbm_to_dbd, GuessingMitigator, OutsiderAttack, ToyClassificationInstance, ToyConfig, ToyDetector,
    ToyTrainer,
};
use defense_games::crypto::fhe::{fhe_decrypt, fhe_encrypt, fhe_eval, fhe_keygen, fhe_register, fhe_setup, Circuit};
use defense_games::crypto::sha256;
use defense_games::crypto::sig::{sig_keygen, sig_sign_zero, sig_verify, SignatureToken};
use defense_games::crypto::snark::{
    snark_extract, snark_prove, snark_verify, ProofToken, SigCountStatement, SnarkParams,
};
use defense_games::data::{
    isqrt, next_level, DataConfig, DataInstance, DataMitigator, DataTrainer, Form, LevelLaw, SelfIterationAttack,
};
use defense_games::detectors::{BaselineDetector, InputView};
use defense_games::estimate::estimate_model_err;
use defense_games::game::{
    run_dbd_trial, run_dbd_trial_fanout, run_dbm_trial, stream_digest, Allowance, Detector, GameParams, Nature,
    PartyBudgets, PartyCtx, TrialSetup,
};
use defense_games::parallel::map_indexed;
use defense_games::seed::{rng_for, trial_seed};
use defense_games::time::{
    sequential_reach, step_conservation, TimeAttack, TimeConfig, TimeInstance, TimeMitigator, TimePayload, TimeTrainer,
};
use defense_games::{empirical_err, hamming, Execution, Model, Task, Trainer, Transcript};

type Criterion = fn() -> Vec<Check>;

/// One measured condition inside a criterion.
struct Check {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Check {
    Check {
        ok,
        detail: detail.into(),
    }
}

/// Every party stayed within its allowance on every transcript.
fn ledgers_respected<'a>(ts: impl IntoIterator<Item = &'a Transcript>) -> Check {
    let (mut ok, mut total) = (0, 0);
    for t in ts {
        ok += t.ledgers.respected() as usize;
        total += 1;
    }
    check(
        ok == total,
        format!("ledgers within allowance on {ok}/{total} transcripts"),
    )
}

fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total.max(1) as f64
}

fn setup(master: u64, i: u64, params: GameParams, budgets: PartyBudgets) -> TrialSetup {
    TrialSetup {
        trial_id: i,
        seed: trial_seed(master, i),
        params,
        budgets,
    }
}

// ---------------------------------------------------------------------------
// Transcript streams. Criterion 8 replays every one of these sequentially.

const TOY_TRIALS: u64 = 500;
const TOY_EPS: f64 = 0.05;
const TOY_DELTA: f64 = 0.02;

fn toy_params() -> GameParams {
    GameParams::new(128, TOY_EPS, TOY_DELTA, 32).unwrap()
}

fn toy_budgets() -> PartyBudgets {
    PartyBudgets {
        trainer: Allowance::samples(64),
        challenger: Allowance::samples(32),
        defender: Allowance::samples(0),
    }
}

struct ToyStreams {
    /// Direction A: the derived mitigator against nature and the attacker.
    a_nature: Vec<Transcript>,
    a_attack: Vec<Transcript>,
    /// The underlying detector on the same setups as `a_attack`.
    a_attack_dbd: Vec<Transcript>,
    /// Direction B: the derived detector against nature and the attacker.
    b_nature: Vec<Transcript>,
    b_attack: Vec<Transcript>,
}

impl ToyStreams {
    fn all(&self) -> impl Iterator<Item = &Vec<Transcript>> {
        [
            &self.a_nature,
            &self.a_attack,
            &self.a_attack_dbd,
            &self.b_nature,
            &self.b_attack,
        ]
        .into_iter()
    }
}

fn toy_streams(exec: Execution) -> (ToyClassificationInstance, ToyStreams) {
    let inst = ToyClassificationInstance::generate(&ToyConfig::default(), 101).unwrap();
    let mitigator = dbd_to_dbm(ToyDetector);
    let detector = dbm_to_dbd(GuessingMitigator, TOY_EPS);
    let s = |master, i| setup(master, i, toy_params(), toy_budgets());
    let streams = ToyStreams {
        a_nature: map_indexed(TOY_TRIALS, exec, |i| {
            run_dbm_trial(&inst, &ToyTrainer, &Nature, &mitigator, &s(11, i))
        }),
        a_attack: map_indexed(TOY_TRIALS, exec, |i| {
            run_dbm_trial(&inst, &ToyTrainer, &OutsiderAttack, &mitigator, &s(12, i))
        }),
        a_attack_dbd: map_indexed(TOY_TRIALS, exec, |i| {
            run_dbd_trial(&inst, &ToyTrainer, &OutsiderAttack, &ToyDetector, &s(12, i))
        }),
        b_nature: map_indexed(TOY_TRIALS, exec, |i| {
            run_dbd_trial(&inst, &ToyTrainer, &Nature, &detector, &s(13, i))
        }),
        b_attack: map_indexed(TOY_TRIALS, exec, |i| {
            run_dbd_trial(&inst, &ToyTrainer, &OutsiderAttack, &detector, &s(14, i))
        }),
    };
    (inst, streams)
}

fn data_params() -> GameParams {
    GameParams::new(128, 0.1, 0.1, 1).unwrap()
}

const DATA_TRIALS: u64 = 200;
const DATA_ATTACK_SAMPLES: u64 = 8;

fn detectors(k: u64) -> [BaselineDetector; 4] {
    [
        BaselineDetector::NeverFlag,
        BaselineDetector::FormatCheck,
        BaselineDetector::LevelThreshold(k),
        BaselineDetector::FrequencyTest { margin: None },
    ]
}

/// Per trial, one transcript per baseline detector.
fn dbd_stream(inst: &DataInstance, k: u64, exec: Execution) -> Vec<Vec<Transcript>> {
    let ds = detectors(k);
    let dyn_ds: Vec<&dyn Detector<_, _, _>> = ds.iter().map(|d| d as &dyn Detector<_, _, _>).collect();
    let budgets = PartyBudgets {
        trainer: Allowance::samples(4 * k),
        challenger: Allowance::samples(DATA_ATTACK_SAMPLES),
        defender: Allowance::samples(0),
    };
    map_indexed(DATA_TRIALS, exec, |i| {
        run_dbd_trial_fanout(
            inst,
            &DataTrainer { k },
            &SelfIterationAttack,
            &dyn_ds,
            &setup(30 + k, i, data_params(), budgets),
        )
    })
}

const DBM_K: u64 = 400;

fn dbm_stream(inst: &DataInstance, exec: Execution) -> Vec<Transcript> {
    let mitigator = DataMitigator { k: DBM_K };
    let budgets = PartyBudgets {
        trainer: Allowance::samples(4 * DBM_K),
        challenger: Allowance::samples(10),
        defender: Allowance::samples(160),
    };
    map_indexed(DATA_TRIALS, exec, |i| {
        run_dbm_trial(
            inst,
            &DataTrainer { k: DBM_K },
            &SelfIterationAttack,
            &mitigator,
            &setup(41, i, data_params(), budgets),
        )
    })
}

const HORIZON: u64 = 256;
const TIME_TRIALS: u64 = 60;

fn time_budgets(inst: &TimeInstance) -> PartyBudgets {
    let top = next_level(inst.config().cap).unwrap();
    PartyBudgets {
        trainer: Allowance::samples(0).with_steps(HORIZON),
        challenger: Allowance::samples(8).with_steps(2 * isqrt(HORIZON)),
        defender: Allowance::samples(0).with_steps(TimeMitigator::suggested_steps(top, 1)),
    }
}

struct TimeStreams {
    dbd_attack: Vec<Transcript>,
    dbm_attack: Vec<Transcript>,
    dbm_nature: Vec<Transcript>,
}

impl TimeStreams {
    fn all(&self) -> impl Iterator<Item = &Vec<Transcript>> {
        [&self.dbd_attack, &self.dbm_attack, &self.dbm_nature].into_iter()
    }
}

fn time_streams(inst: &TimeInstance, exec: Execution) -> TimeStreams {
    let budgets = time_budgets(inst);
    let s = |master, i| setup(master, i, data_params(), budgets);
    let trainer = TimeTrainer { t: HORIZON };
    TimeStreams {
        dbd_attack: map_indexed(TIME_TRIALS, exec, |i| {
            run_dbd_trial(inst, &trainer, &TimeAttack, &BaselineDetector::NeverFlag, &s(71, i))
        }),
        dbm_attack: map_indexed(TIME_TRIALS, exec, |i| {
            run_dbm_trial(inst, &trainer, &TimeAttack, &TimeMitigator, &s(72, i))
        }),
        dbm_nature: map_indexed(TIME_TRIALS, exec, |i| {
            run_dbm_trial(inst, &trainer, &Nature, &TimeMitigator, &s(73, i))
        }),
    }
}

fn data_instance(seed: u64) -> DataInstance {
    DataInstance::generate(DataConfig::default(), seed).unwrap()
}

fn time_instance() -> TimeInstance {
    TimeInstance::generate(TimeConfig::default(), 7).unwrap()
}

/// Digests of every transcript stream, in a fixed order.
fn all_digests(exec: Execution) -> Vec<(String, [u8; 32])> {
    let mut out = Vec::new();
    let (_, toy) = toy_streams(exec);
    for (j, s) in toy.all().enumerate() {
        out.push((format!("toy stream {j}"), stream_digest(s)));
    }
    for k in [16, 400] {
        let per_trial = dbd_stream(&data_instance(3), k, exec);
        for (j, d) in detectors(k).iter().enumerate() {
            out.push((
                format!("dbd K={k} {}", d.name()),
                stream_digest(per_trial.iter().map(|ts| &ts[j])),
            ));
        }
    }
    out.push(("dbm K=400".into(), stream_digest(&dbm_stream(&data_instance(4), exec))));
    for (j, s) in time_streams(&time_instance(), exec).all().enumerate() {
        out.push((format!("time stream {j}"), stream_digest(s)));
    }
    out
}

// ---------------------------------------------------------------------------
// Criteria.

fn toy_equivalence() -> Vec<Check> {
    let (inst, s) = toy_streams(Execution::default());
    let eps = TOY_EPS;
    let violation = 7.0 * eps;
    let mut checks = Vec::new();

    let mut ceiling = |label: &str, hits: usize, ts: &[Transcript], bound: f64| {
        let est = defense_games::RateEstimate::wilson(hits as u64, ts.len() as u64);
        checks.push(check(
            est.within_ceiling(bound),
            format!(
                "{label}: {:.4} (ceiling {bound:.2} + half-width {:.4})",
                est.point,
                est.half_width()
            ),
        ));
    };
    let completeness = |ts: &[Transcript]| ts.iter().filter(|t| t.flagged_or_failed()).count();
    ceiling(
        "A completeness failure",
        completeness(&s.a_nature),
        &s.a_nature,
        8.0 * TOY_DELTA,
    );
    ceiling(
        "A soundness violation",
        s.a_attack.iter().filter(|t| t.dbm_violation(violation)).count(),
        &s.a_attack,
        2.0 * TOY_DELTA,
    );
    ceiling(
        "B completeness failure",
        completeness(&s.b_nature),
        &s.b_nature,
        8.0 * TOY_DELTA,
    );
    ceiling(
        "B soundness violation",
        s.b_attack.iter().filter(|t| t.dbd_violation(violation)).count(),
        &s.b_attack,
        2.0 * TOY_DELTA,
    );

    // Direction A: the derived mitigator answers f(x) and keeps the flag,
    // so its violations are exactly the detector's on the same batch.
    let a_ok = s.a_attack.iter().zip(&s.a_attack_dbd).all(|(m, d)| {
        m.response.as_ref() == Some(&m.model_outputs)
            && m.flag == d.flag
            && m.err_y == d.err_fx
            && (!m.dbm_violation(violation) || d.dbd_violation(violation))
    });
    // Direction B: a detector violation implies the simulated mitigator
    // passed a batch with error above 3ε.
    let mut b_ok = 0;
    let b_all: Vec<&Transcript> = s.b_nature.iter().chain(&s.b_attack).collect();
    for t in &b_all {
        let inner = t.inner.as_ref();
        let holds = match inner {
            Some(inner) => {
                let err_y = empirical_err(|x, y| inst.error(x, y), &t.challenge, &inner.response).unwrap();
                let d = hamming(&inner.response, &t.model_outputs).unwrap();
                let flag_rule = t.flag == Some(inner.flag || d > 4.0 * eps);
                let implication =
                    !(t.err_fx.unwrap() > violation && t.flag == Some(false)) || (err_y > 3.0 * eps && !inner.flag);
                flag_rule && implication
            }
            None => false,
        };
        b_ok += holds as usize;
    }
    checks.push(check(
        a_ok,
        format!(
            "A: derived mitigator mirrors the detector on {} batches",
            s.a_attack.len()
        ),
    ));
    checks.push(check(
        b_ok == b_all.len(),
        format!("B: implication holds on {b_ok}/{} transcripts", b_all.len()),
    ));
    checks.push(ledgers_respected(s.all().flatten()));
    checks
}

fn data_trainer_correctness() -> Vec<Check> {
    let k = 64;
    let inst = data_instance(2);
    let mut ctx = PartyCtx::new(&inst, Party::Trainer, Allowance::samples(4 * k), data_params(), 2);
    let (f, _) = DataTrainer { k }.train(&mut ctx).unwrap();
    let est = estimate_model_err(&inst, &f, 10_000, 2).unwrap();
    let mut rng = rng_for(2, "coverage");
    let levels: Vec<u64> = (1..=k).filter(|&l| next_level(l).unwrap() <= k).collect();
    let mut missed = Vec::new();
    for &level in &levels {
        for form in [Form::Clear, Form::Enc] {
            let (x, _) = inst.sample_with(Some(form), Some(level), &mut rng);
            if inst.error(&x, &f.apply(&x)) {
                missed.push((level, form));
            }
        }
    }
    vec![
        check(
            !f.is_dummy(),
            format!("trainer used {} samples", ctx.ledger().samples_used),
        ),
        check(
            est.successes == 0 && est.high < 1e-3,
            format!(
                "err(f) = {} / {}, Wilson high {:.2e}",
                est.successes, est.trials, est.high
            ),
        ),
        check(
            missed.is_empty(),
            format!(
                "levels 1..={} in both forms, misses {:?}",
                levels.last().unwrap(),
                missed
            ),
        ),
    ]
}

fn dbd_impossibility() -> Vec<Check> {
    let mut checks = Vec::new();
    for k in [16u64, 400] {
        let inst = data_instance(3);
        let per_trial = dbd_stream(&inst, k, Execution::default());
        let max_queries = 3.0 * (k as f64).sqrt() + 2.0;
        let first: Vec<&Transcript> = per_trial.iter().map(|ts| &ts[0]).collect();
        let queries_ok = first
            .iter()
            .all(|t| t.stats.challenger.get("queries").is_none_or(|&q| q <= max_queries));
        let samples_ok = first
            .iter()
            .all(|t| t.ledgers.challenger.samples_used <= DATA_ATTACK_SAMPLES);
        let completed: Vec<&&Transcript> = first.iter().filter(|t| t.aborted.is_none()).collect();
        let at_frontier = completed
            .iter()
            .filter(|t| t.stats.challenger.get("frontier_level") == Some(&(k as f64)))
            .count();
        let encrypted: Vec<&&&Transcript> = completed
            .iter()
            .filter(|t| t.stats.challenger.get("encrypted_outputs") == Some(&1.0))
            .collect();
        let decrypts_to_k = encrypted
            .iter()
            .filter(|t| inst.level_of(&t.challenge[0], true).ok().flatten() == Some(k))
            .count();
        let most_queries = first
            .iter()
            .filter_map(|t| t.stats.challenger.get("queries"))
            .fold(0.0f64, |a, &b| a.max(b));
        checks.push(check(
            queries_ok,
            format!("K={k}: at most {most_queries} queries (bound {max_queries:.1})"),
        ));
        checks.push(check(
            samples_ok,
            format!("K={k}: attacker samples ≤ {DATA_ATTACK_SAMPLES} on every run"),
        ));
        checks.push(check(
            rate(at_frontier, completed.len()) >= 0.95 && rate(decrypts_to_k, encrypted.len()) >= 0.95,
            format!(
                "K={k}: frontier = K on {at_frontier}/{} completed runs; encrypted outputs at level K {decrypts_to_k}/{}",
                completed.len(),
                encrypted.len()
            ),
        ));
        for (j, d) in detectors(k).iter().enumerate() {
            let v = per_trial.iter().filter(|ts| ts[j].dbd_violation(0.1)).count();
            let r = rate(v, per_trial.len());
            checks.push(check(r >= 0.35, format!("K={k} {}: violation rate {r:.3}", d.name())));
        }
        checks.push(ledgers_respected(per_trial.iter().flatten()));
    }
    checks
}

fn dbm_soundness() -> Vec<Check> {
    let inst = data_instance(4);
    let ts = dbm_stream(&inst, Execution::default());
    let contested: Vec<&Transcript> = ts
        .iter()
        .filter(|t| t.aborted_by() != Some(Party::Challenger))
        .collect();
    let good = contested
        .iter()
        .filter(|t| t.aborted.is_none() && (t.err_y == Some(0.0) || t.flag == Some(true)))
        .count();
    let r = rate(good, contested.len());

    let mitigator = DataMitigator { k: DBM_K };
    let (f, private) = {
        let mut ctx = PartyCtx::new(&inst, Party::Trainer, Allowance::samples(4 * DBM_K), data_params(), 5);
        DataTrainer { k: DBM_K }.train(&mut ctx).unwrap()
    };
    let mut ctx = PartyCtx::new(&inst, Party::Defender, Allowance::samples(160), data_params(), 6);
    let strong = mitigator.strengthen(&f, &private, &mut ctx).unwrap();
    let mut rng = rng_for(7, "boundary");
    let mut boundary = |level: u64| {
        let (x, _) = inst.sample_with(Some(Form::Enc), Some(level), &mut rng);
        inst.error(&x, &strong.apply(&x))
    };
    let (h420, h441) = (boundary(420), boundary(441));
    vec![
        check(
            r >= 0.99,
            format!(
                "Pr[err_y = 0 or b = 1] = {r:.3} over {} runs the attacker completed ({} attacker aborts)",
                contested.len(),
                ts.len() - contested.len()
            ),
        ),
        ledgers_respected(&ts),
        check(mitigator.cap() == 440, format!("strengthened cap {}", mitigator.cap())),
        check(
            !h420 && h441,
            format!("h at level 420: {}, at level 441: {}", h420 as u8, h441 as u8),
        ),
    ]
}

fn crypto_contracts() -> Vec<Check> {
    let mut rng = rng_for(5, "crypto");
    let kp = sig_keygen(&mut rng);
    let pk = kp.public();

    let tokens: Vec<SignatureToken> = (0..1000).map(|_| sig_sign_zero(&kp, &mut rng)).collect();
    let round_trips = tokens
        .iter()
        .filter(|t| SignatureToken::decode(&t.encode()).is_some_and(|d| d == **t && sig_verify(pk, &d)))
        .count();
    let mutated_accepted = tokens
        .iter()
        .filter(|t| {
            let mut bytes = t.encode();
            let i = rng.gen_range(0..bytes.len());
            bytes[i] ^= 1 << rng.gen_range(0..8);
            SignatureToken::decode(&bytes).is_some_and(|d| sig_verify(pk, &d))
        })
        .count();

    let params = SnarkParams::setup(b"T=bin(2^128)".to_vec());
    let random_accepted = (0..10_000)
        .filter(|_| {
            let stmt = SigCountStatement::new(rng.gen_range(1..=64), pk);
            let proof = ProofToken {
                token: rng.gen(),
                statement_digest: stmt.digest(),
            };
            snark_verify(&params, &stmt, &proof)
        })
        .count();
    let extracted = (0..100)
        .filter(|_| {
            let k = rng.gen_range(1..=30u64);
            let witness: Vec<SignatureToken> = (0..k).map(|_| sig_sign_zero(&kp, &mut rng)).collect();
            let stmt = SigCountStatement::new(k, pk);
            let proof = snark_prove(&params, pk, &stmt, &witness, &mut rng).unwrap();
            snark_verify(&params, &stmt, &proof) && snark_extract(&params, &proof).is_ok_and(|w| w == witness)
        })
        .count();

    let (pp, msk) = fhe_setup(&mut rng);
    let transparent = (0..100)
        .filter(|i| {
            let len = rng.gen_range(0..200);
            let m: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let key: [u8; 32] = rng.gen();
            let cut = rng.gen_range(0..64usize);
            let (description, circuit): (String, Circuit) = match i % 4 {
                0 => (
                    format!("xor {key:?}"),
                    Arc::new(move |x: &[u8]| x.iter().zip(key.iter().cycle()).map(|(a, b)| a ^ b).collect()),
                ),
                1 => ("reverse".into(), Arc::new(|x: &[u8]| x.iter().rev().copied().collect())),
                2 => (
                    format!("keyed hash {key:?}"),
                    Arc::new(move |x: &[u8]| sha256(&[&key, x]).to_vec()),
                ),
                _ => (
                    format!("truncate {cut}"),
                    Arc::new(move |x: &[u8]| x[..cut.min(x.len())].to_vec()),
                ),
            };
            let expected = circuit(&m);
            let handle = fhe_register(&pp, description.as_bytes(), circuit);
            let id: [u8; 16] = rng.gen();
            let c = fhe_encrypt(&pp, &id, &m, &mut rng);
            fhe_decrypt(&fhe_keygen(&msk, &id), &fhe_eval(&pp, handle, &c)).is_ok_and(|out| out == expected)
        })
        .count();

    let other = sig_keygen(&mut rng);
    let mut forged = 0;
    let mut attempts = 0;
    for s in 1..=20u64 {
        for attempt in 0..50 {
            let mut witness: Vec<SignatureToken> = (0..s).map(|_| sig_sign_zero(&kp, &mut rng)).collect();
            let pick = witness[rng.gen_range(0..witness.len())];
            match attempt % 5 {
                0 => witness.push(pick),
                1 => {
                    let mut t = pick;
                    t.core[rng.gen_range(0..64)] ^= 1;
                    witness.push(t);
                }
                2 => {
                    let mut t = pick;
                    t.nonce[0] ^= 0x80;
                    witness.push(t);
                }
                3 => witness.push(sig_sign_zero(&other, &mut rng)),
                _ => {}
            }
            let stmt = SigCountStatement::new(s + 1, pk);
            attempts += 1;
            if let Ok(proof) = snark_prove(&params, pk, &stmt, &witness, &mut rng) {
                forged += snark_verify(&params, &stmt, &proof) as usize;
            }
        }
    }

    vec![
        check(
            round_trips == 1000,
            format!("signatures: {round_trips}/1000 round trips verify"),
        ),
        check(
            mutated_accepted == 0,
            format!("signatures: {mutated_accepted}/1000 mutated tokens accepted"),
        ),
        check(
            random_accepted == 0,
            format!("proofs: {random_accepted}/10000 random proofs accepted"),
        ),
        check(
            extracted == 100,
            format!("proofs: {extracted}/100 honest proofs extract their witness"),
        ),
        check(
            transparent == 100,
            format!("FHE: {transparent}/100 evaluations decrypt to C(m)"),
        ),
        check(
            forged == 0,
            format!("witness bound: {forged}/{attempts} proofs for s+1 from s tokens"),
        ),
    ]
}

fn level_law_statistics() -> Vec<Check> {
    const DRAWS: u64 = 100_000;
    let inst = data_instance(6);
    let law = LevelLaw::default();
    let draws = map_indexed(DRAWS, Execution::default(), |i| {
        let mut rng = rng_for(trial_seed(6, i), "law");
        let (x, _) = inst.sample_with(None, None, &mut rng);
        let level = inst.level_of(&x, true).ok().flatten().unwrap_or(0);
        (level, inst.public().encrypted(&x))
    });
    let n = DRAWS as f64;
    let mut worst = 0.0f64;
    let mut levels_ok = true;
    for k in 1..=10u64 {
        let p = law.probability(k);
        let freq = draws.iter().filter(|(l, _)| *l == k).count() as f64 / n;
        let z = (freq - p).abs() / (p * (1.0 - p) / n).sqrt();
        worst = worst.max(z);
        levels_ok &= z <= 3.0;
    }
    let enc = draws.iter().filter(|(_, e)| *e).count() as f64 / n;
    let valid = draws.iter().all(|(l, _)| *l >= 1);
    vec![
        check(valid, "every draw opens to a valid level"),
        check(levels_ok, format!("levels 1..=10: largest deviation {worst:.2}σ")),
        check((0.48..=0.52).contains(&enc), format!("encrypted fraction {enc:.4}")),
    ]
}

fn time_end_to_end() -> Vec<Check> {
    let inst = time_instance();
    let s = time_streams(&inst, Execution::default());
    let max_queries = 2.0 * (HORIZON as f64).sqrt() + 4.0;
    let all: Vec<&Transcript> = s.all().flatten().collect();

    let trainer_ok = all
        .iter()
        .all(|t| t.aborted_by() == Some(Party::Trainer) || t.ledgers.trainer.steps_used == HORIZON)
        && all.iter().all(|t| t.aborted_by() != Some(Party::Trainer));
    let attacks: Vec<&Transcript> = s
        .dbd_attack
        .iter()
        .chain(&s.dbm_attack)
        .filter(|t| t.aborted.is_none())
        .collect();
    let queries_ok = attacks
        .iter()
        .all(|t| t.stats.challenger.get("queries").is_some_and(|&q| q <= max_queries));
    let frontier = attacks
        .iter()
        .filter(|t| t.stats.challenger.get("frontier_level") == Some(&(HORIZON as f64)))
        .count();
    let steps_ok = all
        .iter()
        .all(|t| t.ledgers.challenger.steps_used <= 2 * isqrt(HORIZON));

    // The mitigator extends each input by ⌊√t⌋ steps and nothing more.
    let mitigated: Vec<&Transcript> = s
        .dbm_attack
        .iter()
        .chain(&s.dbm_nature)
        .filter(|t| t.aborted.is_none())
        .collect();
    let cost_ok = mitigated.iter().all(|t| {
        let expected: u64 = t
            .challenge
            .iter()
            .map(|x| inst.level_of(x, true).ok().flatten().map_or(0, isqrt))
            .sum();
        t.ledgers.defender.steps_used == expected && t.err_y == Some(0.0)
    });
    let attack_inputs_at_horizon = s
        .dbm_attack
        .iter()
        .filter(|t| t.aborted.is_none() && t.stats.challenger.get("encrypted_outputs") == Some(&1.0))
        .filter(|t| t.ledgers.defender.steps_used == isqrt(HORIZON))
        .count();
    let audits = all
        .iter()
        .filter(|t| step_conservation(t) && sequential_reach(&inst, t))
        .count();

    // A hand-built input one level past the trainer's reach.
    let public = inst.public();
    let (state, proof) = public.origin();
    let origin = TimePayload { t: 0, state, proof };
    let meter = StepMeter::unbounded(Party::Nature);
    let x = public.extend(&origin, HORIZON, &meter).unwrap();
    let mut ctx = PartyCtx::new(
        &inst,
        Party::Defender,
        Allowance::samples(0).with_steps(1000),
        data_params(),
        9,
    );
    let (f, private) = {
        let mut tctx = PartyCtx::new(
            &inst,
            Party::Trainer,
            Allowance::samples(0).with_steps(HORIZON),
            data_params(),
            9,
        );
        TimeTrainer { t: HORIZON }.train(&mut tctx).unwrap()
    };
    let xb = x.encode(public.widths.clear);
    let (ys, _) =
        defense_games::Mitigator::mitigate(&TimeMitigator, &f, &private, std::slice::from_ref(&xb), &mut ctx).unwrap();
    let direct_ok = ctx.ledger().steps_used == isqrt(HORIZON) && !inst.error(&xb, &ys[0]);

    vec![
        check(trainer_ok, format!("trainer spent exactly {HORIZON} steps on all {} transcripts", all.len())),
        check(
            queries_ok && rate(frontier, attacks.len()) >= 0.95,
            format!(
                "attack reached level {HORIZON} on {frontier}/{} completed runs within {max_queries} queries",
                attacks.len()
            ),
        ),
        check(steps_ok, format!("attacker steps ≤ {} on every run", 2 * isqrt(HORIZON))),
        check(
            cost_ok && direct_ok && attack_inputs_at_horizon > 0,
            format!(
                "mitigator cost Σ⌊√t⌋ with err_y = 0 on {} runs; {attack_inputs_at_horizon} encrypted attack inputs cost {}",
                mitigated.len(),
                isqrt(HORIZON)
            ),
        ),
        ledgers_respected(all.iter().copied()),
        check(audits == all.len(), format!("audits pass on {audits}/{} transcripts", all.len())),
    ]
}

fn determinism() -> Vec<Check> {
    let first = all_digests(Execution::default());
    let second = all_digests(Execution::Sequential);
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.1 != b.1)
        .map(|(a, _)| a.0.as_str())
        .collect();
    vec![check(
        differing.is_empty() && first.len() == second.len(),
        format!(
            "{} streams replayed sequentially; differing: {differing:?}",
            first.len()
        ),
    )]
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        (
            "toy classification: detection and mitigation are equivalent",
            toy_equivalence,
        ),
        ("data task: trainer is correct on nature", data_trainer_correctness),
        ("data task: detection fails against self-iteration", dbd_impossibility),
        ("data task: mitigation is sound", dbm_soundness),
        ("cryptographic contracts", crypto_contracts),
        ("level law and encryption mixture", level_law_statistics),
        ("time task end to end", time_end_to_end),
        ("transcript streams are reproducible", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let checks = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            vec![check(false, format!("panicked: {msg}"))]
        });
        let ok = checks.iter().all(|c| c.ok);
        failed += !ok as usize;
        println!(
            "criterion {id} {}: {name} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            println!("    [{}] {}", if c.ok { "ok" } else { "FAIL" }, c.detail);
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
