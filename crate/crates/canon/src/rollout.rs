//! Rollout domain types: sampled responses, per-query groups, and batches.
//!
//! All types are immutable value objects once constructed; invariants are
//! checked at construction so downstream code can rely on them. Group sizes
//! are validated as even up front because the regrouping split requires two
//! equal halves.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One sampled rollout: a scalar reward, the correctness flag it was scored
/// with, and the named metric values (e.g. "entropy", "length") used for
/// conditional regrouping.
///
/// In verifiable-reward mode `reward` is 0 or 1 and equals `correct`; after
/// reward shaping the reward may be any real while `correct` keeps the
/// original verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub response_id: String,
    pub reward: f64,
    pub correct: bool,
    pub metrics: BTreeMap<String, f64>,
}

impl ResponseRecord {
    /// Look up a metric value, failing with the offending response id when
    /// the metric is absent or non-finite.
    pub fn metric(&self, name: &str) -> Result<f64> {
        let value = *self.metrics.get(name).ok_or_else(|| Error::MissingMetric {
            response_id: self.response_id.clone(),
            metric: name.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::NonFiniteMetric {
                response_id: self.response_id.clone(),
                metric: name.to_string(),
            });
        }
        Ok(value)
    }
}

/// The G responses sampled for one query.
///
/// Invariants enforced at construction: G >= 2, G even, response ids unique
/// within the group.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    query_id: String,
    responses: Vec<ResponseRecord>,
}

impl RolloutGroup {
    pub fn new(query_id: impl Into<String>, responses: Vec<ResponseRecord>) -> Result<Self> {
        let query_id = query_id.into();
        if responses.len() < 2 {
            return Err(Error::GroupTooSmall {
                query_id,
                size: responses.len(),
            });
        }
        if !responses.len().is_multiple_of(2) {
            return Err(Error::OddGroupSize {
                query_id,
                size: responses.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for r in &responses {
            if !seen.insert(r.response_id.as_str()) {
                return Err(Error::DuplicateResponseId {
                    query_id: query_id.clone(),
                    response_id: r.response_id.clone(),
                });
            }
        }
        Ok(Self {
            query_id,
            responses,
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn responses(&self) -> &[ResponseRecord] {
        &self.responses
    }

    /// Group size G.
    pub fn size(&self) -> usize {
        self.responses.len()
    }

    /// Arithmetic mean of the rewards.
    pub fn mean_reward(&self) -> f64 {
        let sum: f64 = self.responses.iter().map(|r| r.reward).sum();
        sum / self.responses.len() as f64
    }

    /// Copy of this group with rewards replaced element-wise; ids, metrics,
    /// and correctness flags are preserved. Used by reward shaping.
    pub fn with_rewards(&self, rewards: &[f64]) -> Result<Self> {
        if rewards.len() != self.responses.len() {
            return Err(Error::InvalidConfig(format!(
                "reward vector length {} does not match group size {}",
                rewards.len(),
                self.responses.len()
            )));
        }
        let responses = self
            .responses
            .iter()
            .zip(rewards)
            .map(|(r, &reward)| ResponseRecord {
                reward,
                ..r.clone()
            })
            .collect();
        Ok(Self {
            query_id: self.query_id.clone(),
            responses,
        })
    }
}

/// All groups sampled at one training step. Every group must share the same
/// group size G.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    groups: Vec<RolloutGroup>,
    step: u64,
}

impl RolloutBatch {
    pub fn new(groups: Vec<RolloutGroup>, step: u64) -> Result<Self> {
        if let Some(first) = groups.first() {
            let expected = first.size();
            for g in &groups[1..] {
                if g.size() != expected {
                    return Err(Error::MixedGroupSizes {
                        query_id: g.query_id().to_string(),
                        expected,
                        got: g.size(),
                    });
                }
            }
        }
        Ok(Self { groups, step })
    }

    pub fn groups(&self) -> &[RolloutGroup] {
        &self.groups
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn responses(&self) -> impl Iterator<Item = &ResponseRecord> {
        self.groups.iter().flat_map(|g| g.responses().iter())
    }

    pub fn total_responses(&self) -> usize {
        self.groups.iter().map(|g| g.size()).sum()
    }

    /// Mean accuracy of the whole batch: correct responses over total
    /// responses, every response weighted equally.
    pub fn accuracy(&self) -> Result<f64> {
        if self.groups.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let total = self.total_responses();
        let correct = self.responses().filter(|r| r.correct).count();
        Ok(correct as f64 / total as f64)
    }

    /// Serialize as JSONL: one object per group with keys `query_id`, `step`,
    /// and `responses`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for group in &self.groups {
            let line = GroupLine {
                query_id: group.query_id(),
                step: self.step,
                responses: group.responses(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Read a batch back from JSONL produced by [`RolloutBatch::write_jsonl`].
    /// All lines must agree on `step`; group invariants are re-validated.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut groups = Vec::new();
        let mut step = None;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: OwnedGroupLine = serde_json::from_str(&line)?;
            match step {
                None => step = Some(parsed.step),
                Some(s) if s != parsed.step => {
                    return Err(Error::InvalidConfig(format!(
                        "jsonl mixes steps {s} and {}",
                        parsed.step
                    )));
                }
                Some(_) => {}
            }
            groups.push(RolloutGroup::new(parsed.query_id, parsed.responses)?);
        }
        Self::new(groups, step.unwrap_or(0))
    }
}

#[derive(Serialize)]
struct GroupLine<'a> {
    query_id: &'a str,
    step: u64,
    responses: &'a [ResponseRecord],
}

#[derive(Deserialize)]
struct OwnedGroupLine {
    query_id: String,
    step: u64,
    responses: Vec<ResponseRecord>,
}

/// One advantage scalar per response, keyed by response id.
///
/// Estimators produce exactly one finite entry per response of the source
/// group or batch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdvantageVector {
    values: BTreeMap<String, f64>,
}

impl AdvantageVector {
    pub fn get(&self, response_id: &str) -> Option<f64> {
        self.values.get(response_id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Merge advantage vectors computed per group into one batch-level
    /// vector. Fails on response-id collisions across groups.
    pub fn merge<I: IntoIterator<Item = AdvantageVector>>(parts: I) -> Result<Self> {
        let mut values = BTreeMap::new();
        for part in parts {
            for (id, v) in part.values {
                if values.insert(id.clone(), v).is_some() {
                    return Err(Error::DuplicateResponseId {
                        query_id: "<batch>".to_string(),
                        response_id: id,
                    });
                }
            }
        }
        Ok(Self { values })
    }
}

impl FromIterator<(String, f64)> for AdvantageVector {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}
