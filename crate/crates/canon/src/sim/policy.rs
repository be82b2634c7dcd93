use std::collections::BTreeMap;

use crate::sim::EnvSpec;
use crate::{Error, Result};

/// One categorical distribution over strategies per query, parameterized by
/// logits under a temperature-1 softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    logits: BTreeMap<String, Vec<f64>>,
}

impl PolicyState {
    /// Uniform policy: all logits zero.
    pub fn uniform(env: &EnvSpec) -> Self {
        let logits = env
            .queries
            .iter()
            .map(|q| (q.query_id.clone(), vec![0.0; q.strategies.len()]))
            .collect();
        Self { logits }
    }

    pub fn logits(&self, query_id: &str) -> Option<&[f64]> {
        self.logits.get(query_id).map(Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.logits.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Strategy probabilities for one query.
    pub fn probs(&self, query_id: &str) -> Option<Vec<f64>> {
        self.logits(query_id).map(softmax)
    }

    /// Index of the highest-logit strategy (first on ties).
    pub fn greedy(&self, query_id: &str) -> Option<usize> {
        self.logits(query_id).map(argmax)
    }

    /// Mean categorical entropy of the per-query distributions, in nats.
    pub fn mean_entropy(&self) -> f64 {
        let total: f64 = self
            .logits
            .values()
            .map(|l| {
                softmax(l)
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|&p| -p * p.ln())
                    .sum::<f64>()
            })
            .sum();
        total / self.logits.len() as f64
    }

    /// Replace the logits of one query. Lengths must match the existing
    /// strategy count and values must be finite.
    pub fn set_logits(&mut self, query_id: &str, logits: Vec<f64>) -> Result<()> {
        let slot = self
            .logits
            .get_mut(query_id)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown query {query_id}")))?;
        if slot.len() != logits.len() {
            return Err(Error::InvalidConfig(format!(
                "query {query_id} has {} strategies, got {} logits",
                slot.len(),
                logits.len()
            )));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "non-finite logit for query {query_id}"
            )));
        }
        *slot = logits;
        Ok(())
    }

    /// Apply one gradient-ascent step: logits += learning_rate * gradient.
    pub(crate) fn apply_gradient(
        &mut self,
        gradient: &BTreeMap<String, Vec<f64>>,
        learning_rate: f64,
        step: usize,
    ) -> Result<()> {
        for (query_id, grad) in gradient {
            let logits = self
                .logits
                .get_mut(query_id)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown query {query_id}")))?;
            for (l, g) in logits.iter_mut().zip(grad) {
                *l += learning_rate * g;
                if !l.is_finite() {
                    return Err(Error::NonFinite {
                        step,
                        quantity: format!("logit for query {query_id}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Max-subtracted softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
