use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::advantage::{self, AdvantageConfig, Estimator};
use crate::regroup::split_by_metric;
use crate::rng::substream;
use crate::rollout::{AdvantageVector, ResponseRecord, RolloutBatch, RolloutGroup};
use crate::schedule::{self, ScheduleKind, ScheduleSpec};
use crate::sim::policy::{argmax, softmax};
use crate::sim::{shaped_rewards, EnvSpec, PolicyState, Shaping, METRIC_ENTROPY, METRIC_LENGTH};
use crate::{Error, Result};

/// Full description of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub env: EnvSpec,
    /// Responses sampled per query at every step (G).
    pub group_size: usize,
    pub advantage: AdvantageConfig,
    pub schedule: ScheduleSpec,
    pub shaping: Shaping,
    pub learning_rate: f64,
    pub eps_low: f64,
    pub eps_high: f64,
    pub steps: usize,
    pub updates_per_rollout: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.advantage.validate()?;
        self.schedule.validate()?;
        if self.group_size < 2 || !self.group_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "G must be an even integer of at least 2, got {}",
                self.group_size
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lr must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, eps) in [("eps_low", self.eps_low), ("eps_high", self.eps_high)] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie inside (0, 1), got {eps}"
                )));
            }
        }
        if self.updates_per_rollout == 0 {
            return Err(Error::InvalidConfig(
                "updates_per_rollout must be at least 1".into(),
            ));
        }
        let step_driven = matches!(
            self.schedule.kind,
            ScheduleKind::CosFirstInter | ScheduleKind::CosFirstIntra
        );
        if step_driven && (self.schedule.total_steps as usize) < self.steps {
            return Err(Error::InvalidConfig(format!(
                "schedule horizon total_steps_S ({}) is shorter than the run ({} steps)",
                self.schedule.total_steps, self.steps
            )));
        }
        Ok(())
    }
}

/// One sampled batch plus the latent strategy index behind each response,
/// aligned with `batch.groups()[i].responses()[j]`.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub batch: RolloutBatch,
    pub choices: Vec<Vec<usize>>,
}

/// Per-step telemetry. `mu_used` is the scheduled mixture weight (logged for
/// every estimator, applied only by the conditional one); the metric means
/// are taken over all responses of the step's batch; `policy_entropy` is the
/// mean categorical entropy of the policy that generated the batch;
/// `reward_gap` averages the per-query gap between the metric-high and
/// metric-low halves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub mu_used: f64,
    pub mean_reward: f64,
    pub mean_entropy_metric: f64,
    pub mean_length_metric: f64,
    pub policy_entropy: f64,
    pub reward_gap: f64,
    pub clip_fraction: f64,
}

impl StepRecord {
    fn ensure_finite(&self) -> Result<()> {
        let fields = [
            ("mu_used", self.mu_used),
            ("mean_reward", self.mean_reward),
            ("mean_entropy_metric", self.mean_entropy_metric),
            ("mean_length_metric", self.mean_length_metric),
            ("policy_entropy", self.policy_entropy),
            ("reward_gap", self.reward_gap),
            ("clip_fraction", self.clip_fraction),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    step: self.step,
                    quantity: name.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Column order of the CSV log.
pub const CSV_HEADER: &str =
    "step,mu_used,mean_reward,mean_entropy_metric,mean_length_metric,policy_entropy,reward_gap,clip_fraction";

/// The per-step records of one full run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.step,
                r.mu_used,
                r.mean_reward,
                r.mean_entropy_metric,
                r.mean_length_metric,
                r.policy_entropy,
                r.reward_gap,
                r.clip_fraction
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("infallible vec write");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn final_record(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

fn truncated_normal<R: Rng>(rng: &mut R, mean: f64, std: f64, floor: f64) -> f64 {
    if std == 0.0 {
        return mean.max(floor);
    }
    let dist = Normal::new(mean, std).expect("std validated non-negative");
    for _ in 0..100 {
        let v = dist.sample(rng);
        if v >= floor {
            return v;
        }
    }
    floor
}

fn sample_query(
    query: &crate::sim::QuerySpec,
    logits: &[f64],
    group_size: usize,
    seed: u64,
    step: u64,
    query_index: u64,
) -> Result<(RolloutGroup, Vec<usize>)> {
    let mut rng = substream(seed, step, query_index);
    let probs = softmax(logits);
    let mut responses = Vec::with_capacity(group_size);
    let mut choices = Vec::with_capacity(group_size);
    for j in 0..group_size {
        let u: f64 = rng.gen();
        let mut chosen = probs.len() - 1;
        let mut acc = 0.0;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = k;
                break;
            }
        }
        let strategy = &query.strategies[chosen];
        let correct = rng.gen_bool(strategy.success_prob);
        let entropy = truncated_normal(&mut rng, strategy.entropy_mean, strategy.entropy_std, 0.0);
        let length = truncated_normal(&mut rng, strategy.length_mean, strategy.length_std, 1.0);
        responses.push(ResponseRecord {
            response_id: format!("{}-r{:02}", query.query_id, j),
            reward: f64::from(correct),
            correct,
            metrics: [
                (METRIC_ENTROPY.to_string(), entropy),
                (METRIC_LENGTH.to_string(), length),
            ]
            .into_iter()
            .collect(),
        });
        choices.push(chosen);
    }
    Ok((
        RolloutGroup::new(query.query_id.clone(), responses)?,
        choices,
    ))
}

/// Sample G responses per query from the policy. Each query draws from its
/// own counter-based substream of `(seed, step)`, so the result does not
/// depend on scheduling and is identical with and without the `parallel`
/// feature.
pub fn rollout(
    policy: &PolicyState,
    env: &EnvSpec,
    group_size: usize,
    seed: u64,
    step: u64,
) -> Result<Rollout> {
    let tasks: Vec<(u64, &crate::sim::QuerySpec, &[f64])> = env
        .queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let logits = policy.logits(&q.query_id).ok_or_else(|| {
                Error::InvalidConfig(format!("policy lacks query {}", q.query_id))
            })?;
            Ok((i as u64, q, logits))
        })
        .collect::<Result<_>>()?;

    #[cfg(feature = "parallel")]
    let sampled: Vec<(RolloutGroup, Vec<usize>)> = {
        use rayon::prelude::*;
        tasks
            .into_par_iter()
            .map(|(i, q, logits)| sample_query(q, logits, group_size, seed, step, i))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let sampled: Vec<(RolloutGroup, Vec<usize>)> = tasks
        .into_iter()
        .map(|(i, q, logits)| sample_query(q, logits, group_size, seed, step, i))
        .collect::<Result<_>>()?;

    let mut groups = Vec::with_capacity(sampled.len());
    let mut choices = Vec::with_capacity(sampled.len());
    for (g, c) in sampled {
        groups.push(g);
        choices.push(c);
    }
    Ok(Rollout {
        batch: RolloutBatch::new(groups, step)?,
        choices,
    })
}

/// Objective value, exact logit gradient, and clipped fraction of one
/// surrogate evaluation.
#[derive(Debug, Clone)]
pub struct SurrogateEval {
    pub gradient: BTreeMap<String, Vec<f64>>,
    pub objective: f64,
    pub clip_fraction: f64,
}

/// Walk every response once and accumulate the clipped-surrogate objective,
/// its exact gradient with respect to the logits, and the fraction of
/// responses on the clipped branch.
pub fn evaluate_surrogate(
    policy: &PolicyState,
    old_policy: &PolicyState,
    rollout: &Rollout,
    advantages: &AdvantageVector,
    eps_low: f64,
    eps_high: f64,
) -> Result<SurrogateEval> {
    let mut gradient: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut objective = 0.0;
    let mut clipped = 0usize;
    let mut total = 0usize;

    for (gi, group) in rollout.batch.groups().iter().enumerate() {
        let query_id = group.query_id();
        let logits = policy
            .logits(query_id)
            .ok_or_else(|| Error::InvalidConfig(format!("policy lacks query {query_id}")))?;
        let old_logits = old_policy
            .logits(query_id)
            .ok_or_else(|| Error::InvalidConfig(format!("old policy lacks query {query_id}")))?;
        let probs = softmax(logits);
        let old_probs = softmax(old_logits);
        let grad = gradient
            .entry(query_id.to_string())
            .or_insert_with(|| vec![0.0; probs.len()]);

        for (j, response) in group.responses().iter().enumerate() {
            let k = rollout.choices[gi][j];
            let adv = advantages.get(&response.response_id).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "advantage vector lacks response {}",
                    response.response_id
                ))
            })?;
            let ratio = probs[k] / old_probs[k];
            let unclipped = ratio * adv;
            let clipped_obj = ratio.clamp(1.0 - eps_low, 1.0 + eps_high) * adv;
            total += 1;
            if clipped_obj < unclipped {
                // min() takes the clipped constant branch: zero gradient
                objective += clipped_obj;
                clipped += 1;
            } else {
                objective += unclipped;
                // d/dlogits ratio = ratio * (e_k - probs)
                let coeff = adv * ratio;
                for (m, g) in grad.iter_mut().enumerate() {
                    let indicator = f64::from(m == k);
                    *g += coeff * (indicator - probs[m]);
                }
            }
        }
    }

    let n = total as f64;
    for grad in gradient.values_mut() {
        for g in grad.iter_mut() {
            *g /= n;
        }
    }
    Ok(SurrogateEval {
        gradient,
        objective: objective / n,
        clip_fraction: clipped as f64 / n,
    })
}

/// The clipped-surrogate objective value: mean over responses of
/// `min(r * A, clip(r, 1 - eps_low, 1 + eps_high) * A)` with
/// `r = pi(strategy | q) / pi_old(strategy | q)`.
pub fn surrogate_objective(
    policy: &PolicyState,
    old_policy: &PolicyState,
    rollout: &Rollout,
    advantages: &AdvantageVector,
    eps_low: f64,
    eps_high: f64,
) -> Result<f64> {
    evaluate_surrogate(policy, old_policy, rollout, advantages, eps_low, eps_high)
        .map(|t| t.objective)
}

/// Run `updates_per_rollout` gradient-ascent steps on the clipped surrogate
/// and return the updated policy plus the mean clipped fraction. The policy
/// that generated the rollout serves as the fixed old policy, so with a
/// single update the ratio starts at 1 and the gradient reduces to the
/// advantage-weighted score function.
pub fn surrogate_update(
    policy: &PolicyState,
    rollout: &Rollout,
    advantages: &AdvantageVector,
    config: &TrainConfig,
    step: usize,
) -> Result<(PolicyState, f64)> {
    let old_policy = policy.clone();
    let mut updated = policy.clone();
    let mut clip_sum = 0.0;
    for _ in 0..config.updates_per_rollout {
        let terms = evaluate_surrogate(
            &updated,
            &old_policy,
            rollout,
            advantages,
            config.eps_low,
            config.eps_high,
        )?;
        clip_sum += terms.clip_fraction;
        updated.apply_gradient(&terms.gradient, config.learning_rate, step)?;
    }
    Ok((updated, clip_sum / config.updates_per_rollout as f64))
}

fn batch_advantages(
    batch: &RolloutBatch,
    policy: &PolicyState,
    env: &EnvSpec,
    config: &AdvantageConfig,
    mu: f64,
) -> Result<AdvantageVector> {
    let per_group = |f: &dyn Fn(&RolloutGroup) -> Result<AdvantageVector>| {
        let parts: Result<Vec<AdvantageVector>> = batch.groups().iter().map(f).collect();
        AdvantageVector::merge(parts?)
    };
    match config.estimator {
        Estimator::DrGrpo => per_group(&|g| Ok(advantage::dr_grpo(g))),
        Estimator::Grpo => per_group(&|g| Ok(advantage::grpo(g, config.std_epsilon))),
        Estimator::Rloo => per_group(&|g| Ok(advantage::rloo(g))),
        Estimator::ReinforcePp => advantage::reinforce_pp(batch, config.std_epsilon),
        Estimator::Remax => {
            let specs: BTreeMap<&str, &crate::sim::QuerySpec> = env
                .queries
                .iter()
                .map(|q| (q.query_id.as_str(), q))
                .collect();
            per_group(&|g| {
                let spec = specs.get(g.query_id()).ok_or_else(|| {
                    Error::InvalidConfig(format!("environment lacks query {}", g.query_id()))
                })?;
                let logits = policy.logits(g.query_id()).ok_or_else(|| {
                    Error::InvalidConfig(format!("policy lacks query {}", g.query_id()))
                })?;
                // greedy-decoding analog: the argmax strategy's expected reward
                let baseline = spec.strategies[argmax(logits)].success_prob;
                Ok(advantage::remax(g, baseline))
            })
        }
        Estimator::Canon => {
            let cfg = AdvantageConfig {
                mu,
                ..config.clone()
            };
            per_group(&|g| advantage::canon(g, &cfg))
        }
    }
}

/// Run the full training loop: rollout, reward shaping, batch accuracy,
/// scheduled mu, advantages, surrogate update, telemetry. Deterministic
/// given the config (the seed drives every random draw).
pub fn train(config: &TrainConfig) -> Result<TrainLog> {
    config.validate()?;
    let mut policy = PolicyState::uniform(&config.env);
    let mut records = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let sampled = rollout(
            &policy,
            &config.env,
            config.group_size,
            config.seed,
            step as u64,
        )?;
        let shaped_groups: Vec<RolloutGroup> = sampled
            .batch
            .groups()
            .iter()
            .map(|g| shaped_rewards(g, &config.shaping))
            .collect::<Result<_>>()?;
        let shaped = Rollout {
            batch: RolloutBatch::new(shaped_groups, step as u64)?,
            choices: sampled.choices,
        };

        let accuracy = shaped.batch.accuracy()?;
        let mu = schedule::mu_at(step as u32, accuracy, &config.schedule);
        let advantages =
            batch_advantages(&shaped.batch, &policy, &config.env, &config.advantage, mu)?;

        let policy_entropy = policy.mean_entropy();
        let (next_policy, clip_fraction) =
            surrogate_update(&policy, &shaped, &advantages, config, step)?;

        let n = shaped.batch.total_responses() as f64;
        let mean_reward = shaped.batch.responses().map(|r| r.reward).sum::<f64>() / n;
        let mean_entropy_metric = shaped
            .batch
            .responses()
            .map(|r| r.metric(METRIC_ENTROPY))
            .sum::<Result<f64>>()?
            / n;
        let mean_length_metric = shaped
            .batch
            .responses()
            .map(|r| r.metric(METRIC_LENGTH))
            .sum::<Result<f64>>()?
            / n;
        let reward_gap = shaped
            .batch
            .groups()
            .iter()
            .map(|g| split_by_metric(g, &config.advantage.metric_name).map(|p| p.reward_gap()))
            .sum::<Result<f64>>()?
            / shaped.batch.groups().len() as f64;

        let record = StepRecord {
            step,
            mu_used: mu,
            mean_reward,
            mean_entropy_metric,
            mean_length_metric,
            policy_entropy,
            reward_gap,
            clip_fraction,
        };
        record.ensure_finite()?;
        records.push(record);
        policy = next_policy;
    }

    Ok(TrainLog { records })
}
