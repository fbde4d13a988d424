use defense_games::budget::{Party, StepMeter};
use defense_games::data::{Form, BOTTOM};
use defense_games::detectors::BaselineDetector;
use defense_games::game::{
    run_dbd_trial, run_dbm_trial, Allowance, GameParams, Nature, PartyBudgets, PartyCtx, TrialSetup,
};
use defense_games::seed::rng_for;
use defense_games::time::{
    sequential_reach, step_conservation, TimeAttack, TimeConfig, TimeInstance, TimeMitigator, TimePayload, TimeTrainer,
};
use defense_games::{Mitigator, Model, Task, Trainer};

const T: u64 = 256;

fn params(q: usize) -> GameParams {
    GameParams::new(128, 0.1, 0.1, q).unwrap()
}

fn setup(seed: u64, q: usize) -> TrialSetup {
    TrialSetup {
        trial_id: seed,
        seed,
        params: params(q),
        budgets: PartyBudgets {
            trainer: Allowance::samples(0).with_steps(T),
            challenger: Allowance::samples(8).with_steps(32),
            defender: Allowance::samples(0).with_steps(TimeMitigator::suggested_steps(600, q)),
        },
    }
}

fn payload_at(inst: &TimeInstance, t: u64) -> TimePayload {
    let public = inst.public();
    let (state, proof) = public.origin();
    let origin = TimePayload { t: 0, state, proof };
    public.extend(&origin, t, &StepMeter::unbounded(Party::Nature)).unwrap()
}

#[test]
fn trainer_spends_exactly_its_horizon() {
    let inst = TimeInstance::generate(TimeConfig::default(), 1).unwrap();
    let mut ctx = PartyCtx::new(&inst, Party::Trainer, Allowance::samples(0).with_steps(T), params(1), 1);
    let (f, private) = TimeTrainer { t: T }.train(&mut ctx).unwrap();
    assert_eq!(ctx.ledger().steps_used, T);
    assert_eq!(ctx.ledger().samples_used, 0);
    assert_eq!(f.snapshots().entries.len(), 16);
    assert_eq!(private.frontier.t, T);

    let w = inst.public().widths.clear;
    let x = payload_at(&inst, 1).encode(w);
    assert_eq!(inst.level_of(&f.apply(&x), false).unwrap(), Some(16));
    let x = payload_at(&inst, 250).encode(w);
    assert_eq!(f.apply(&x), BOTTOM);
}

#[test]
fn trainer_short_of_steps_is_refused() {
    let inst = TimeInstance::generate(TimeConfig::default(), 2).unwrap();
    let mut ctx = PartyCtx::new(
        &inst,
        Party::Trainer,
        Allowance::samples(0).with_steps(T - 1),
        params(1),
        2,
    );
    assert!(TimeTrainer { t: T }.train(&mut ctx).is_err());
}

#[test]
fn attack_walks_the_snapshot_grid() {
    let inst = TimeInstance::generate(TimeConfig::default(), 3).unwrap();
    let mut completed = 0;
    for seed in 0..20 {
        let t = run_dbd_trial(
            &inst,
            &TimeTrainer { t: T },
            &TimeAttack,
            &BaselineDetector::NeverFlag,
            &setup(seed, 1),
        );
        if t.aborted_by() == Some(Party::Challenger) {
            continue;
        }
        assert!(t.aborted.is_none());
        completed += 1;
        // 1, 16, 32, ..., 256, then the model refuses.
        assert_eq!(t.stats.challenger["queries"], 17.0);
        assert_eq!(t.stats.challenger["frontier_level"], T as f64);
        assert!(t.stats.challenger["queries"] <= 2.0 * 16.0 + 4.0);
        assert_eq!(t.ledgers.challenger.steps_used, 1);
        assert!(step_conservation(&t));
        assert!(sequential_reach(&inst, &t));
        if t.stats.challenger["encrypted_outputs"] == 1.0 {
            assert_eq!(inst.level_of(&t.challenge[0], true).unwrap(), Some(T));
            assert_eq!(t.err_fx, Some(1.0));
        }
    }
    assert!(completed >= 15);
}

#[test]
fn mitigator_pays_root_t_per_input() {
    let inst = TimeInstance::generate(TimeConfig::default(), 4).unwrap();
    let w = inst.public().widths.clear;
    let (f, private) = {
        let mut ctx = PartyCtx::new(&inst, Party::Trainer, Allowance::samples(0).with_steps(T), params(1), 4);
        TimeTrainer { t: T }.train(&mut ctx).unwrap()
    };
    let x = payload_at(&inst, 10_000);
    let y = payload_at(&inst, 10_100);
    let mut rng = rng_for(4, "enc");
    let (xe, _) = inst.encrypt_pair(&x, &y, &mut rng);
    for input in [x.encode(w), xe] {
        let mut ctx = PartyCtx::new(
            &inst,
            Party::Defender,
            Allowance::samples(0).with_steps(1000),
            params(1),
            5,
        );
        let (ys, flag) = TimeMitigator
            .mitigate(&f, &private, std::slice::from_ref(&input), &mut ctx)
            .unwrap();
        assert!(!flag);
        assert_eq!(ctx.ledger().steps_used, 100);
        assert_eq!(ctx.steps.tap().count(), 100);
        assert!(!inst.time_h_eval(&input, &ys[0]));
        assert_eq!(inst.open_response(&input, &ys[0]).unwrap().t, 10_100);
    }
    let mut ctx = PartyCtx::new(
        &inst,
        Party::Defender,
        Allowance::samples(0).with_steps(99),
        params(1),
        6,
    );
    let (ys, _) = TimeMitigator.mitigate(&f, &private, &[x.encode(w)], &mut ctx).unwrap();
    assert_eq!(ys[0], BOTTOM);
    assert!(ctx.steps.refused());
}

#[test]
fn mitigation_game_audits() {
    let inst = TimeInstance::generate(TimeConfig::default(), 5).unwrap();
    for seed in 0..10 {
        let t = run_dbm_trial(
            &inst,
            &TimeTrainer { t: T },
            &TimeAttack,
            &TimeMitigator,
            &setup(seed, 4),
        );
        if t.aborted_by() == Some(Party::Challenger) {
            continue;
        }
        assert!(t.aborted.is_none(), "{:?}", t.aborted);
        assert_eq!(t.err_y, Some(0.0));
        assert!(step_conservation(&t));
        assert!(sequential_reach(&inst, &t));
        let t = run_dbm_trial(&inst, &TimeTrainer { t: T }, &Nature, &TimeMitigator, &setup(seed, 4));
        assert!(t.aborted.is_none(), "{:?}", t.aborted);
        assert_eq!(t.err_y, Some(0.0));
        assert_eq!(t.ledgers.nature_steps, inst.nature_steps());
        assert!(step_conservation(&t));
        assert!(sequential_reach(&inst, &t));
    }
}

#[test]
fn honest_samples_of_both_forms() {
    let inst = TimeInstance::generate(TimeConfig::default(), 6).unwrap();
    let mut rng = rng_for(6, "s");
    for form in [Form::Clear, Form::Enc] {
        let (x, y) = inst.sample_with(Some(form), Some(100), &mut rng);
        assert!(!inst.error(&x, &y));
        assert_eq!(inst.level_of(&x, true).unwrap(), Some(100));
        assert_eq!(inst.open_response(&x, &y).unwrap().t, 110);
    }
}
