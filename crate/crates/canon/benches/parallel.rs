//! Compares the data-parallel paths against the always-sequential fallback.
//!
//! With the default `parallel` feature the `auto` rows run on rayon; built
//! with `--no-default-features` they collapse onto the sequential path, so
//! the pairs should then measure identically.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use canon::advantage::{self, AdvantageConfig, Estimator};
use canon::rollout::{ResponseRecord, RolloutGroup};
use canon::sim::{rollout, EnvSpec, PolicyState, QuerySpec, StrategySpec};
use canon::theory::{mc_oracle, mc_oracle_seq, ConditionModel};

fn oracle(c: &mut Criterion) {
    let model = ConditionModel::new(0.4, 0.8, 0.2, 0.5).unwrap();
    let mut group = c.benchmark_group("mc_oracle");
    for &n_groups in &[2_000usize, 20_000] {
        group.throughput(Throughput::Elements(n_groups as u64));
        group.bench_with_input(BenchmarkId::new("auto", n_groups), &n_groups, |b, &n| {
            b.iter(|| mc_oracle(&model, 16, n, 7).unwrap());
        });
        group.bench_with_input(
            BenchmarkId::new("sequential", n_groups),
            &n_groups,
            |b, &n| {
                b.iter(|| mc_oracle_seq(&model, 16, n, 7).unwrap());
            },
        );
    }
    group.finish();
}

fn wide_env(n_queries: usize) -> EnvSpec {
    EnvSpec {
        queries: (0..n_queries)
            .map(|i| QuerySpec {
                query_id: format!("q{i:03}"),
                strategies: vec![
                    StrategySpec {
                        name: "a".into(),
                        success_prob: 0.7,
                        entropy_mean: 0.5,
                        entropy_std: 0.1,
                        length_mean: 400.0,
                        length_std: 40.0,
                    },
                    StrategySpec {
                        name: "b".into(),
                        success_prob: 0.5,
                        entropy_mean: 2.0,
                        entropy_std: 0.3,
                        length_mean: 800.0,
                        length_std: 80.0,
                    },
                ],
            })
            .collect(),
    }
}

fn batch_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("rollout");
    for &n_queries in &[8usize, 256] {
        let env = wide_env(n_queries);
        let policy = PolicyState::uniform(&env);
        group.throughput(Throughput::Elements((n_queries * 16) as u64));
        group.bench_with_input(
            BenchmarkId::new("queries", n_queries),
            &n_queries,
            |b, _| {
                b.iter(|| rollout(&policy, &env, 16, 3, 0).unwrap());
            },
        );
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let mut rng = canon::substream(99, 0, 0);
    use rand::Rng;
    let groups: Vec<RolloutGroup> = (0..1_000)
        .map(|gi| {
            let responses = (0..16)
                .map(|i| ResponseRecord {
                    response_id: format!("r{i:02}"),
                    reward: f64::from(rng.gen_bool(0.5)),
                    correct: rng.gen_bool(0.5),
                    metrics: [("entropy".to_string(), rng.gen_range(0.0..3.0))]
                        .into_iter()
                        .collect(),
                })
                .collect();
            RolloutGroup::new(format!("q{gi}"), responses).unwrap()
        })
        .collect();
    let cfg = AdvantageConfig {
        estimator: Estimator::Canon,
        mu: 0.7,
        alpha: 0.96,
        metric_name: "entropy".to_string(),
        std_epsilon: 1e-6,
    };

    let mut bench = c.benchmark_group("advantage");
    bench.throughput(Throughput::Elements(groups.len() as u64));
    bench.bench_function("dr_grpo_1k_groups", |b| {
        b.iter(|| {
            groups
                .iter()
                .map(|g| advantage::dr_grpo(g).len())
                .sum::<usize>()
        });
    });
    bench.bench_function("canon_1k_groups", |b| {
        b.iter(|| {
            groups
                .iter()
                .map(|g| advantage::canon(g, &cfg).unwrap().len())
                .sum::<usize>()
        });
    });
    bench.finish();
}

criterion_group!(benches, oracle, batch_sampling, estimators);
criterion_main!(benches);
