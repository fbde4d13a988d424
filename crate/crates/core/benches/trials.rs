use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use defense_games::data::{DataConfig, DataInstance, DataTrainer, SelfIterationAttack};
use defense_games::detectors::BaselineDetector;
use defense_games::game::{run_dbd_trial, Allowance, GameParams, PartyBudgets, TrialSetup};
use defense_games::parallel::map_indexed;
use defense_games::seed::trial_seed;
use defense_games::Execution;

const K: u64 = 64;
const TRIALS: u64 = 32;

fn modes() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

fn dbd_batch(c: &mut Criterion) {
    let inst = DataInstance::generate(DataConfig::default(), 1).unwrap();
    let params = GameParams::new(128, 0.1, 0.1, 1).unwrap();
    let budgets = PartyBudgets {
        trainer: Allowance::samples(4 * K),
        challenger: Allowance::samples(8),
        defender: Allowance::samples(0),
    };
    let mut group = c.benchmark_group("dbd_trials");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, TRIALS), &exec, |b, &exec| {
            b.iter(|| {
                map_indexed(TRIALS, exec, |i| {
                    let setup = TrialSetup {
                        trial_id: i,
                        seed: trial_seed(9, i),
                        params,
                        budgets,
                    };
                    run_dbd_trial(
                        &inst,
                        &DataTrainer { k: K },
                        &SelfIterationAttack,
                        &BaselineDetector::FormatCheck,
                        &setup,
                    )
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, dbd_batch);
criterion_main!(benches);
