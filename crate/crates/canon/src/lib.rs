//! Conditional advantage estimation for group-relative policy gradients.
//!
//! The crate provides:
//!
//! - [`rollout`]: domain types for sampled responses, per-query groups, and
//!   batches, with JSONL serialization.
//! - [`regroup`]: the equal-size metric split of a group into a metric-high
//!   and a metric-low half.
//! - [`advantage`]: group-relative baselines (mean-centered, normalized,
//!   leave-one-out, greedy-baseline, global-batch) and the conditional
//!   inter/intra estimators with their weighted mixture.
//! - [`schedule`]: accuracy-driven and cosine-restart schedules for the
//!   mixture weight.
//! - [`theory`]: closed-form expected advantages under a two-class condition
//!   model, amplification ratios, the equal-split region check, and a
//!   Monte-Carlo oracle for all of them.
//! - [`sim`]: a synthetic verifiable-reward environment plus a clipped
//!   surrogate policy-gradient trainer that reproduces the estimators'
//!   metric-steering dynamics at desk scale.
//!
//! Heavy data-parallel paths (the Monte-Carlo oracle, per-query rollout
//! sampling) run on rayon when the default `parallel` feature is enabled and
//! fall back to sequential iterators without it; results are bit-identical
//! either way.

pub mod advantage;
mod error;
pub mod regroup;
mod rng;
pub mod rollout;
pub mod schedule;
pub mod sim;
pub mod theory;

pub use error::Error;
pub use rng::{substream, substream_seed};

pub type Result<T> = std::result::Result<T, Error>;
