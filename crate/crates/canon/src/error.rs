use thiserror::Error;

/// Errors produced by rollout construction, estimators, schedules, and the
/// simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty batch")]
    EmptyBatch,

    #[error("group {query_id}: group size must be even, got {size}")]
    OddGroupSize { query_id: String, size: usize },

    #[error("group {query_id}: need at least 2 responses, got {size}")]
    GroupTooSmall { query_id: String, size: usize },

    #[error("group {query_id}: duplicate response id \"{response_id}\"")]
    DuplicateResponseId {
        query_id: String,
        response_id: String,
    },

    #[error("batch mixes group sizes: expected {expected}, group {query_id} has {got}")]
    MixedGroupSizes {
        query_id: String,
        expected: usize,
        got: usize,
    },

    #[error("response {response_id}: missing metric \"{metric}\"")]
    MissingMetric { response_id: String, metric: String },

    #[error("response {response_id}: metric \"{metric}\" is not finite")]
    NonFiniteMetric { response_id: String, metric: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite {quantity} at step {step}")]
    NonFinite { step: usize, quantity: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
