//! Advantage estimators.
//!
//! Group-relative baselines:
//!
//!   dr_grpo      A_o = R_o - mean(R over group)
//!   grpo         A_o = (R_o - mean) / (pop_std + eps)
//!   rloo         A_o = R_o - mean(R over group without o)
//!   remax        A_o = R_o - greedy_baseline
//!   reinforce_pp A_o = (R_o - batch_mean) / (batch_pop_std + eps)
//!
//! Conditional estimators over an equal-size metric split (plus = metric-high
//! half, minus = metric-low half):
//!
//!   inter(alpha) A_o = R_o - alpha * mean_plus        if o in minus
//!                A_o = alpha * R_o - mean_minus       if o in plus
//!   intra        A_o = R_o - mean(own half)
//!   mixture      A_o = mu * inter + (1 - mu) * intra
//!
//! With mu = 0.5 and alpha = 1 the mixture reduces exactly to dr_grpo, so the
//! equal split makes dr_grpo a special case of the conditional family.
//!
//! The alpha weight applies asymmetrically, exactly as written above: it
//! scales the plus half's own reward on one branch and the plus half's mean
//! on the other. Do not "simplify" it into a symmetric discount.

use serde::{Deserialize, Serialize};

use crate::regroup::{split_by_metric, Partition};
use crate::rollout::{AdvantageVector, ResponseRecord, RolloutBatch, RolloutGroup};
use crate::{Error, Result};

/// Which estimator a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Grpo,
    DrGrpo,
    Rloo,
    Remax,
    ReinforcePp,
    Canon,
}

/// Estimator configuration. `mu`, `alpha`, and `metric` only apply to the
/// conditional (canon) estimator; `std_epsilon` only to the normalized ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageConfig {
    pub estimator: Estimator,
    pub mu: f64,
    pub alpha: f64,
    #[serde(rename = "metric")]
    pub metric_name: String,
    pub std_epsilon: f64,
}

impl Default for AdvantageConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::DrGrpo,
            mu: 0.5,
            alpha: 1.0,
            metric_name: "entropy".to_string(),
            std_epsilon: 1e-6,
        }
    }
}

impl AdvantageConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidConfig(format!(
                "mu must be within [0, 1], got {}",
                self.mu
            )));
        }
        if self.alpha <= 0.0 || self.alpha > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha must be within (0, 1], got {}",
                self.alpha
            )));
        }
        if self.std_epsilon <= 0.0 || self.std_epsilon.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "std_epsilon must be positive, got {}",
                self.std_epsilon
            )));
        }
        if self.metric_name.is_empty() {
            return Err(Error::InvalidConfig("metric must be non-empty".into()));
        }
        Ok(())
    }
}

fn collect(responses: &[ResponseRecord], f: impl Fn(&ResponseRecord) -> f64) -> AdvantageVector {
    responses
        .iter()
        .map(|r| (r.response_id.clone(), f(r)))
        .collect()
}

fn population_std(rewards: impl Iterator<Item = f64>, mean: f64, n: usize) -> f64 {
    let ss: f64 = rewards.map(|r| (r - mean) * (r - mean)).sum();
    (ss / n as f64).sqrt()
}

/// Mean-centered rewards: A_o = R_o - mean(group).
pub fn dr_grpo(group: &RolloutGroup) -> AdvantageVector {
    let mean = group.mean_reward();
    collect(group.responses(), |r| r.reward - mean)
}

/// Normalized rewards: A_o = (R_o - mean) / (population std + eps).
///
/// The additive epsilon keeps all-equal-reward groups at zero instead of
/// dividing by zero.
pub fn grpo(group: &RolloutGroup, std_epsilon: f64) -> AdvantageVector {
    let mean = group.mean_reward();
    let std = population_std(
        group.responses().iter().map(|r| r.reward),
        mean,
        group.size(),
    );
    collect(group.responses(), |r| {
        (r.reward - mean) / (std + std_epsilon)
    })
}

/// Leave-one-out baseline: A_o = R_o - mean(rewards of the other responses).
pub fn rloo(group: &RolloutGroup) -> AdvantageVector {
    let sum: f64 = group.responses().iter().map(|r| r.reward).sum();
    let others = (group.size() - 1) as f64;
    collect(group.responses(), |r| r.reward - (sum - r.reward) / others)
}

/// Constant baseline from the greedy policy: A_o = R_o - baseline.
pub fn remax(group: &RolloutGroup, greedy_baseline_reward: f64) -> AdvantageVector {
    collect(group.responses(), |r| r.reward - greedy_baseline_reward)
}

/// Global-batch normalization: A_o = (R_o - batch mean) / (batch pop std + eps),
/// computed over every response of every group.
pub fn reinforce_pp(batch: &RolloutBatch, std_epsilon: f64) -> Result<AdvantageVector> {
    let n = batch.total_responses();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let sum: f64 = batch.responses().map(|r| r.reward).sum();
    let mean = sum / n as f64;
    let std = population_std(batch.responses().map(|r| r.reward), mean, n);
    AdvantageVector::merge(
        batch
            .groups()
            .iter()
            .map(|g| collect(g.responses(), |r| (r.reward - mean) / (std + std_epsilon))),
    )
}

/// Cross-half comparison: each response is measured against the mean reward
/// of the half it does not belong to. `alpha` down-weights the metric-high
/// half (alpha = 1 is the unweighted form).
pub fn canon_inter(group: &RolloutGroup, partition: &Partition, alpha: f64) -> AdvantageVector {
    let mean_plus = partition.mean_plus();
    let mean_minus = partition.mean_minus();
    collect(group.responses(), |r| {
        if partition.contains_plus(&r.response_id) {
            alpha * r.reward - mean_minus
        } else {
            r.reward - alpha * mean_plus
        }
    })
}

/// Within-half comparison: each response is measured against the mean reward
/// of its own half, so correct responses in the weaker half score higher than
/// identical responses in the stronger half.
pub fn canon_intra(group: &RolloutGroup, partition: &Partition) -> AdvantageVector {
    let mean_plus = partition.mean_plus();
    let mean_minus = partition.mean_minus();
    collect(group.responses(), |r| {
        if partition.contains_plus(&r.response_id) {
            r.reward - mean_plus
        } else {
            r.reward - mean_minus
        }
    })
}

/// The conditional mixture: split the group on `config.metric_name`, then
/// return `mu * inter(alpha) + (1 - mu) * intra` per response.
pub fn canon(group: &RolloutGroup, config: &AdvantageConfig) -> Result<AdvantageVector> {
    let partition = split_by_metric(group, &config.metric_name)?;
    Ok(canon_with_partition(
        group,
        &partition,
        config.mu,
        config.alpha,
    ))
}

/// Mixture over a precomputed partition, for callers that already split the
/// group (the analysis tooling reuses one partition across estimates).
pub fn canon_with_partition(
    group: &RolloutGroup,
    partition: &Partition,
    mu: f64,
    alpha: f64,
) -> AdvantageVector {
    let mean_plus = partition.mean_plus();
    let mean_minus = partition.mean_minus();
    collect(group.responses(), |r| {
        let (inter, intra) = if partition.contains_plus(&r.response_id) {
            (alpha * r.reward - mean_minus, r.reward - mean_plus)
        } else {
            (r.reward - alpha * mean_plus, r.reward - mean_minus)
        };
        mu * inter + (1.0 - mu) * intra
    })
}
