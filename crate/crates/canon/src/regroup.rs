//! Conditional regrouping: split a rollout group into two equal halves by
//! sorting on a metric.
//!
//! The metric-high half is always called `plus` and the metric-low half
//! `minus`. Ties are broken by insertion order (stable sort), so a partition
//! is a deterministic function of the group.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::rollout::RolloutGroup;
use crate::Result;

/// An equal-size split of one group: the metric-high half (`plus`), the
/// metric-low half (`minus`), and the mean reward of each half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    metric_name: String,
    plus: BTreeSet<String>,
    minus: BTreeSet<String>,
    mean_plus: f64,
    mean_minus: f64,
}

impl Partition {
    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    /// Response ids of the metric-high half.
    pub fn plus(&self) -> &BTreeSet<String> {
        &self.plus
    }

    /// Response ids of the metric-low half.
    pub fn minus(&self) -> &BTreeSet<String> {
        &self.minus
    }

    pub fn contains_plus(&self, response_id: &str) -> bool {
        self.plus.contains(response_id)
    }

    /// Mean reward of the metric-high half.
    pub fn mean_plus(&self) -> f64 {
        self.mean_plus
    }

    /// Mean reward of the metric-low half.
    pub fn mean_minus(&self) -> f64 {
        self.mean_minus
    }

    /// Gap in average reward between the metric-high and metric-low halves.
    pub fn reward_gap(&self) -> f64 {
        self.mean_plus - self.mean_minus
    }
}

/// Sort the group's responses ascending by `metric_name` and split into two
/// equal halves: the top G/2 form `plus`, the bottom G/2 form `minus`.
///
/// Equal metric values are assigned deterministically by insertion order
/// (stable sort), so earlier responses fill `minus` first. Errors if any
/// response lacks the metric or carries a non-finite value.
pub fn split_by_metric(group: &RolloutGroup, metric_name: &str) -> Result<Partition> {
    let responses = group.responses();
    debug_assert!(
        responses.len().is_multiple_of(2),
        "group size validated at construction"
    );

    let mut order: Vec<(usize, f64)> = Vec::with_capacity(responses.len());
    for (i, r) in responses.iter().enumerate() {
        order.push((i, r.metric(metric_name)?));
    }
    order.sort_by(|a, b| a.1.total_cmp(&b.1));

    let half = responses.len() / 2;
    let (low, high) = order.split_at(half);

    let half_stats = |idxs: &[(usize, f64)]| {
        let mut ids = BTreeSet::new();
        let mut sum = 0.0;
        for &(i, _) in idxs {
            ids.insert(responses[i].response_id.clone());
            sum += responses[i].reward;
        }
        (ids, sum / idxs.len() as f64)
    };
    let (minus, mean_minus) = half_stats(low);
    let (plus, mean_plus) = half_stats(high);

    Ok(Partition {
        metric_name: metric_name.to_string(),
        plus,
        minus,
        mean_plus,
        mean_minus,
    })
}
