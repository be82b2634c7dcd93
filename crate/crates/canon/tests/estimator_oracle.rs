//! Every estimator must match an independent brute-force implementation on
//! random instances. The reference functions below work on plain index-based
//! reward/metric slices and are written directly from the defining formulas,
//! sharing no code with the library path they check.

use std::collections::BTreeMap;

use canon::advantage::{self, AdvantageConfig, Estimator};
use canon::regroup::split_by_metric;
use canon::rollout::{AdvantageVector, ResponseRecord, RolloutBatch, RolloutGroup};
use rand::Rng;

mod reference {
    /// Indices of the metric-low and metric-high halves: sort ascending by
    /// metric (stable on ties), bottom half low, top half high.
    pub fn halves(metrics: &[f64]) -> (Vec<usize>, Vec<usize>) {
        let mut order: Vec<usize> = (0..metrics.len()).collect();
        order.sort_by(|&a, &b| metrics[a].total_cmp(&metrics[b]));
        let half = metrics.len() / 2;
        (order[..half].to_vec(), order[half..].to_vec())
    }

    fn mean(rewards: &[f64], idx: &[usize]) -> f64 {
        idx.iter().map(|&i| rewards[i]).sum::<f64>() / idx.len() as f64
    }

    pub fn dr_grpo(rewards: &[f64]) -> Vec<f64> {
        let m = rewards.iter().sum::<f64>() / rewards.len() as f64;
        rewards.iter().map(|r| r - m).collect()
    }

    pub fn grpo(rewards: &[f64], eps: f64) -> Vec<f64> {
        let n = rewards.len() as f64;
        let m = rewards.iter().sum::<f64>() / n;
        let std = (rewards.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n).sqrt();
        rewards.iter().map(|r| (r - m) / (std + eps)).collect()
    }

    pub fn rloo(rewards: &[f64]) -> Vec<f64> {
        (0..rewards.len())
            .map(|i| {
                let others: f64 = rewards
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, r)| r)
                    .sum();
                rewards[i] - others / (rewards.len() - 1) as f64
            })
            .collect()
    }

    pub fn remax(rewards: &[f64], baseline: f64) -> Vec<f64> {
        rewards.iter().map(|r| r - baseline).collect()
    }

    pub fn reinforce_pp(rewards: &[f64], eps: f64) -> Vec<f64> {
        grpo(rewards, eps)
    }

    pub fn inter(rewards: &[f64], metrics: &[f64], alpha: f64) -> Vec<f64> {
        let (low, high) = halves(metrics);
        let mean_low = mean(rewards, &low);
        let mean_high = mean(rewards, &high);
        (0..rewards.len())
            .map(|i| {
                if high.contains(&i) {
                    alpha * rewards[i] - mean_low
                } else {
                    rewards[i] - alpha * mean_high
                }
            })
            .collect()
    }

    pub fn intra(rewards: &[f64], metrics: &[f64]) -> Vec<f64> {
        let (low, high) = halves(metrics);
        let mean_low = mean(rewards, &low);
        let mean_high = mean(rewards, &high);
        (0..rewards.len())
            .map(|i| {
                if high.contains(&i) {
                    rewards[i] - mean_high
                } else {
                    rewards[i] - mean_low
                }
            })
            .collect()
    }

    pub fn mixture(rewards: &[f64], metrics: &[f64], mu: f64, alpha: f64) -> Vec<f64> {
        let a = inter(rewards, metrics, alpha);
        let b = intra(rewards, metrics);
        a.iter()
            .zip(&b)
            .map(|(x, y)| mu * x + (1.0 - mu) * y)
            .collect()
    }
}

fn make_group(rewards: &[f64], metrics: &[f64]) -> RolloutGroup {
    let responses = rewards
        .iter()
        .zip(metrics)
        .enumerate()
        .map(|(i, (&reward, &m))| ResponseRecord {
            response_id: format!("o{i:02}"),
            reward,
            correct: reward >= 0.5,
            metrics: BTreeMap::from([("m".to_string(), m)]),
        })
        .collect();
    RolloutGroup::new("q", responses).unwrap()
}

fn as_vec(adv: &AdvantageVector, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| adv.get(&format!("o{i:02}")).unwrap())
        .collect()
}

fn assert_matches(name: &str, got: &[f64], expected: &[f64], tol: f64) {
    for (i, (g, e)) in got.iter().zip(expected).enumerate() {
        assert!(
            (g - e).abs() <= tol,
            "{name}: component {i} mismatch: got {g}, expected {e}"
        );
    }
}

#[test]
fn estimators_match_brute_force_reference() {
    let mut rng = canon::substream(20_240_915, 0, 0);
    for instance in 0..1500 {
        let g = 2 * rng.gen_range(1..=4); // G in {2,4,6,8}
        let rewards: Vec<f64> = (0..g)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    f64::from(rng.gen_bool(0.5)) // verifiable-mode 0/1
                } else {
                    rng.gen_range(-2.0..2.0) // shaped real rewards
                }
            })
            .collect();
        let metrics: Vec<f64> = (0..g).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let group = make_group(&rewards, &metrics);
        let eps = 1e-6;
        let tol = 1e-10;

        assert_matches(
            "dr_grpo",
            &as_vec(&advantage::dr_grpo(&group), g),
            &reference::dr_grpo(&rewards),
            tol,
        );
        assert_matches(
            "grpo",
            &as_vec(&advantage::grpo(&group, eps), g),
            &reference::grpo(&rewards, eps),
            tol,
        );
        assert_matches(
            "rloo",
            &as_vec(&advantage::rloo(&group), g),
            &reference::rloo(&rewards),
            tol,
        );
        let baseline = rng.gen_range(0.0..1.0);
        assert_matches(
            "remax",
            &as_vec(&advantage::remax(&group, baseline), g),
            &reference::remax(&rewards, baseline),
            tol,
        );

        let partition = split_by_metric(&group, "m").unwrap();
        let alpha = rng.gen_range(0.05..=1.0);
        let mu = rng.gen_range(0.0..=1.0);
        assert_matches(
            "inter",
            &as_vec(&advantage::canon_inter(&group, &partition, 1.0), g),
            &reference::inter(&rewards, &metrics, 1.0),
            tol,
        );
        assert_matches(
            "inter(alpha)",
            &as_vec(&advantage::canon_inter(&group, &partition, alpha), g),
            &reference::inter(&rewards, &metrics, alpha),
            tol,
        );
        assert_matches(
            "intra",
            &as_vec(&advantage::canon_intra(&group, &partition), g),
            &reference::intra(&rewards, &metrics),
            tol,
        );
        let cfg = AdvantageConfig {
            estimator: Estimator::Canon,
            mu,
            alpha,
            metric_name: "m".to_string(),
            std_epsilon: eps,
        };
        assert_matches(
            "mixture",
            &as_vec(&advantage::canon(&group, &cfg).unwrap(), g),
            &reference::mixture(&rewards, &metrics, mu, alpha),
            tol,
        );

        // global-batch normalization over a two-group batch
        if instance % 3 == 0 {
            let rewards2: Vec<f64> = (0..g).map(|_| f64::from(rng.gen_bool(0.5))).collect();
            let metrics2: Vec<f64> = (0..g).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let responses2 = rewards2
                .iter()
                .zip(&metrics2)
                .enumerate()
                .map(|(i, (&reward, &m))| ResponseRecord {
                    response_id: format!("b{i:02}"),
                    reward,
                    correct: reward >= 0.5,
                    metrics: BTreeMap::from([("m".to_string(), m)]),
                })
                .collect();
            let group2 = RolloutGroup::new("q2", responses2).unwrap();
            let batch = RolloutBatch::new(vec![group.clone(), group2], 0).unwrap();
            let adv = advantage::reinforce_pp(&batch, eps).unwrap();
            let pooled: Vec<f64> = rewards.iter().chain(&rewards2).copied().collect();
            let expected = reference::reinforce_pp(&pooled, eps);
            for (i, e) in expected.iter().enumerate() {
                let id = if i < g {
                    format!("o{i:02}")
                } else {
                    format!("b{:02}", i - g)
                };
                assert!(
                    (adv.get(&id).unwrap() - e).abs() <= tol,
                    "reinforce_pp mismatch at {id}"
                );
            }
        }
    }
}
