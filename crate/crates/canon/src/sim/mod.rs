//! Synthetic verifiable-reward environment and a clipped-surrogate policy
//! gradient trainer.
//!
//! The environment models each query as a small set of latent strategies.
//! The policy is one categorical distribution per query; each sampled
//! response picks a strategy, draws a Bernoulli reward from that strategy's
//! success probability, and draws its "entropy" and "length" metrics from
//! the strategy's truncated normal distributions. This is the smallest
//! testbed in which response-level advantage estimators produce the
//! metric-steering dynamics they are designed for.

mod env;
mod policy;
mod shaping;
mod trainer;

pub use env::{EnvSpec, QuerySpec, StrategySpec};
pub use policy::PolicyState;
pub use shaping::{shaped_rewards, Shaping};
pub use trainer::{
    evaluate_surrogate, rollout, surrogate_objective, surrogate_update, train, Rollout, StepRecord,
    SurrogateEval, TrainConfig, TrainLog, CSV_HEADER,
};

/// Metric name under which the simulator records per-response entropy.
pub const METRIC_ENTROPY: &str = "entropy";
/// Metric name under which the simulator records response length.
pub const METRIC_LENGTH: &str = "length";
