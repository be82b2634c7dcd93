//! Mixture-weight scheduling.
//!
//! Four strategies drive the inter/intra mixture weight mu over training:
//! two accuracy-driven rules (mu = 1 - batch accuracy, mu = batch accuracy)
//! and two step-driven rules built on a cosine annealing curve with warm-up
//! and restarts, plus a trivial constant schedule.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// mu fixed at `mu_constant`.
    Constant,
    /// mu = 1 - batch accuracy: inter-heavy early, intra-heavy once accuracy rises.
    AccFirstInter,
    /// mu = batch accuracy: intra-heavy early, inter-heavy later.
    AccFirstIntra,
    /// mu follows the cosine-restart curve (high to low within each period).
    CosFirstInter,
    /// mu = 1 - cosine-restart curve (low to high within each period).
    CosFirstIntra,
}

/// Schedule parameters. The cosine fields follow the warm-up/restart curve:
/// `warmup_w` warm-up steps ramp linearly to `mu_max`, after which the value
/// anneals from `mu_max` to `mu_min` over each of `restarts_c` equal periods
/// spanning the remaining `total_steps - warmup_w` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    #[serde(rename = "mu")]
    pub mu_constant: f64,
    pub mu_max: f64,
    pub mu_min: f64,
    pub warmup_w: u32,
    pub restarts_c: u32,
    #[serde(rename = "total_steps_S")]
    pub total_steps: u32,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Constant,
            mu_constant: 0.5,
            mu_max: 1.0,
            mu_min: 0.4,
            warmup_w: 30,
            restarts_c: 3,
            total_steps: 150,
        }
    }
}

impl ScheduleSpec {
    pub fn constant(mu: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            mu_constant: mu,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu_constant) {
            return Err(Error::InvalidConfig(format!(
                "mu must be within [0, 1], got {}",
                self.mu_constant
            )));
        }
        if !(0.0 <= self.mu_min && self.mu_min <= self.mu_max && self.mu_max <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= mu_min <= mu_max <= 1, got mu_min={} mu_max={}",
                self.mu_min, self.mu_max
            )));
        }
        // annealing-curve constraints only bind for the step-driven kinds
        if matches!(
            self.kind,
            ScheduleKind::CosFirstInter | ScheduleKind::CosFirstIntra
        ) {
            if self.warmup_w == 0 {
                return Err(Error::InvalidConfig("warmup_w must be positive".into()));
            }
            if self.restarts_c == 0 {
                return Err(Error::InvalidConfig("restarts_c must be positive".into()));
            }
            if self.warmup_w >= self.total_steps {
                return Err(Error::InvalidConfig(format!(
                    "warmup_w ({}) must be smaller than total_steps_S ({})",
                    self.warmup_w, self.total_steps
                )));
            }
            if self.period() == 0 {
                return Err(Error::InvalidConfig(format!(
                    "restarts_c ({}) too large: (total_steps_S - warmup_w) / restarts_c rounds to zero",
                    self.restarts_c
                )));
            }
        }
        Ok(())
    }

    fn period(&self) -> u32 {
        (self.total_steps - self.warmup_w) / self.restarts_c
    }
}

/// The annealing curve value at `step`.
///
/// During warm-up (`step < warmup_w`) the value ramps as
/// `mu_max * (step + 1) / warmup_w`, reaching `mu_max` on the last warm-up
/// step. Afterwards, with period `P = floor((S - w) / c)` and phase
/// `s' = (step - w) mod P`, the value is
/// `mu_min + (mu_max - mu_min) * (1 + cos(pi * s' / P)) / 2`.
pub fn cosine_restart(step: u32, spec: &ScheduleSpec) -> f64 {
    debug_assert!(
        step < spec.total_steps,
        "step {step} outside schedule horizon"
    );
    if step < spec.warmup_w {
        return spec.mu_max * f64::from(step + 1) / f64::from(spec.warmup_w);
    }
    let period = spec.period();
    let phase = (step - spec.warmup_w) % period;
    let cos = (std::f64::consts::PI * f64::from(phase) / f64::from(period)).cos();
    spec.mu_min + 0.5 * (spec.mu_max - spec.mu_min) * (1.0 + cos)
}

/// The mixture weight to use at `step` given the batch accuracy, clamped to
/// [0, 1]. The clamp only fires on mis-set cosine bounds and is logged.
pub fn mu_at(step: u32, batch_accuracy: f64, spec: &ScheduleSpec) -> f64 {
    let raw = match spec.kind {
        ScheduleKind::Constant => spec.mu_constant,
        ScheduleKind::AccFirstInter => 1.0 - batch_accuracy,
        ScheduleKind::AccFirstIntra => batch_accuracy,
        ScheduleKind::CosFirstInter => cosine_restart(step, spec),
        ScheduleKind::CosFirstIntra => 1.0 - cosine_restart(step, spec),
    };
    let mu = raw.clamp(0.0, 1.0);
    if mu != raw {
        log::warn!("schedule produced mu={raw} at step {step}; clamped to {mu}");
    }
    mu
}
