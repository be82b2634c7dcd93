//! Run configuration: JSON schema, defaults, and validation with field-path
//! diagnostics. Unknown keys anywhere in the file are hard errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use canon::advantage::{AdvantageConfig, Estimator};
use canon::schedule::{ScheduleKind, ScheduleSpec};
use canon::sim::{EnvSpec, Shaping, TrainConfig};

use crate::CliError;

fn d_group_size() -> usize {
    16
}
fn d_mu() -> f64 {
    0.5
}
fn d_alpha() -> f64 {
    1.0
}
fn d_metric() -> String {
    "entropy".to_string()
}
fn d_std_epsilon() -> f64 {
    1e-6
}
fn d_mu_max() -> f64 {
    1.0
}
fn d_mu_min() -> f64 {
    0.4
}
fn d_warmup_w() -> u32 {
    30
}
fn d_restarts_c() -> u32 {
    3
}
fn d_lr() -> f64 {
    1.5
}
fn d_eps_low() -> f64 {
    0.2
}
fn d_eps_high() -> f64 {
    0.28
}
fn d_steps() -> usize {
    200
}
fn d_updates() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvantageBlock {
    #[serde(default = "AdvantageBlock::d_estimator")]
    pub estimator: Estimator,
    #[serde(default = "d_mu")]
    pub mu: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_metric")]
    pub metric: String,
    #[serde(default = "d_std_epsilon")]
    pub std_epsilon: f64,
}

impl AdvantageBlock {
    fn d_estimator() -> Estimator {
        Estimator::DrGrpo
    }
}

impl Default for AdvantageBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    #[serde(default = "ScheduleBlock::d_kind")]
    pub kind: ScheduleKind,
    #[serde(default = "d_mu")]
    pub mu: f64,
    #[serde(default = "d_mu_max")]
    pub mu_max: f64,
    #[serde(default = "d_mu_min")]
    pub mu_min: f64,
    #[serde(default = "d_warmup_w")]
    pub warmup_w: u32,
    #[serde(default = "d_restarts_c")]
    pub restarts_c: u32,
    /// Defaults to the run's step count when omitted.
    #[serde(rename = "total_steps_S", default)]
    pub total_steps: Option<u32>,
}

impl ScheduleBlock {
    fn d_kind() -> ScheduleKind {
        ScheduleKind::Constant
    }
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerBlock {
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_eps_low")]
    pub eps_low: f64,
    #[serde(default = "d_eps_high")]
    pub eps_high: f64,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_updates")]
    pub updates_per_rollout: usize,
}

impl Default for TrainerBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// The on-disk run configuration after defaults are applied. Serialized
/// verbatim into the run manifest so a run is reconstructible from its
/// manifest alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env_path: String,
    #[serde(rename = "G", default = "d_group_size")]
    pub group_size: usize,
    #[serde(default)]
    pub advantage: AdvantageBlock,
    #[serde(default)]
    pub schedule: ScheduleBlock,
    #[serde(default = "RunConfig::d_shaping")]
    pub shaping: Shaping,
    #[serde(default)]
    pub trainer: TrainerBlock,
    pub seed: u64,
}

impl RunConfig {
    fn d_shaping() -> Shaping {
        Shaping::None
    }

    /// Parse a config file, apply defaults, and validate. `seed_override`
    /// replaces the file's seed before validation so the manifest snapshot
    /// matches what actually ran.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        if config.schedule.total_steps.is_none() {
            config.schedule.total_steps = Some(config.trainer.steps as u32);
        }
        config.validate()?;
        Ok(config)
    }

    /// Field-path diagnostics for every constraint violation in the file.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errors = Vec::new();
        if self.group_size < 2 || !self.group_size.is_multiple_of(2) {
            errors.push(format!(
                "G: must be an even integer of at least 2 (got {})",
                self.group_size
            ));
        }
        if !(0.0..=1.0).contains(&self.advantage.mu) {
            errors.push(format!(
                "advantage.mu: must be within [0, 1] (got {})",
                self.advantage.mu
            ));
        }
        if self.advantage.alpha <= 0.0 || self.advantage.alpha > 1.0 {
            errors.push(format!(
                "advantage.alpha: must be within (0, 1] (got {})",
                self.advantage.alpha
            ));
        }
        if self.advantage.std_epsilon <= 0.0 || self.advantage.std_epsilon.is_nan() {
            errors.push(format!(
                "advantage.std_epsilon: must be positive (got {})",
                self.advantage.std_epsilon
            ));
        }
        if self.advantage.metric.is_empty() {
            errors.push("advantage.metric: must be non-empty".to_string());
        }
        if !(0.0..=1.0).contains(&self.schedule.mu) {
            errors.push(format!(
                "schedule.mu: must be within [0, 1] (got {})",
                self.schedule.mu
            ));
        }
        if !(0.0 <= self.schedule.mu_min
            && self.schedule.mu_min <= self.schedule.mu_max
            && self.schedule.mu_max <= 1.0)
        {
            errors.push(format!(
                "schedule.mu_min/schedule.mu_max: need 0 <= mu_min <= mu_max <= 1 (got {} and {})",
                self.schedule.mu_min, self.schedule.mu_max
            ));
        }
        if self.schedule.warmup_w == 0 {
            errors.push("schedule.warmup_w: must be positive".to_string());
        }
        if self.schedule.restarts_c == 0 {
            errors.push("schedule.restarts_c: must be positive".to_string());
        }
        let total_steps = self
            .schedule
            .total_steps
            .unwrap_or(self.trainer.steps as u32);
        let cosine = matches!(
            self.schedule.kind,
            ScheduleKind::CosFirstInter | ScheduleKind::CosFirstIntra
        );
        if cosine {
            if self.schedule.warmup_w >= total_steps {
                errors.push(format!(
                    "schedule.warmup_w: must be smaller than schedule.total_steps_S ({} >= {})",
                    self.schedule.warmup_w, total_steps
                ));
            } else if (total_steps - self.schedule.warmup_w) / self.schedule.restarts_c.max(1) == 0
            {
                errors.push(
                    "schedule.restarts_c: too large, annealing period rounds to zero".to_string(),
                );
            }
            if (total_steps as usize) < self.trainer.steps {
                errors.push(format!(
                    "schedule.total_steps_S: shorter than trainer.steps ({} < {})",
                    total_steps, self.trainer.steps
                ));
            }
        }
        match self.shaping {
            Shaping::ClipLength { cap } if cap < 1.0 || cap.is_nan() => {
                errors.push(format!("shaping.cap: must be at least 1 (got {cap})"));
            }
            Shaping::Additive { coeff } if !coeff.is_finite() => {
                errors.push("shaping.coeff: must be finite".to_string());
            }
            Shaping::Multiplicative { coeff }
                if !(coeff.is_finite() && (0.0..=1.0).contains(&coeff)) =>
            {
                errors.push(format!(
                    "shaping.coeff: must be within [0, 1] (got {coeff})"
                ));
            }
            _ => {}
        }
        if !(self.trainer.lr > 0.0 && self.trainer.lr.is_finite()) {
            errors.push(format!(
                "trainer.lr: must be positive (got {})",
                self.trainer.lr
            ));
        }
        for (name, eps) in [
            ("trainer.eps_low", self.trainer.eps_low),
            ("trainer.eps_high", self.trainer.eps_high),
        ] {
            if !(eps > 0.0 && eps < 1.0) {
                errors.push(format!("{name}: must lie inside (0, 1) (got {eps})"));
            }
        }
        if self.trainer.steps == 0 {
            errors.push("trainer.steps: must be at least 1".to_string());
        }
        if self.trainer.updates_per_rollout == 0 {
            errors.push("trainer.updates_per_rollout: must be at least 1".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors.join("\n")))
        }
    }

    /// Resolve `env_path` relative to the config file's directory.
    pub fn env_path_from(&self, config_path: &Path) -> PathBuf {
        let env_path = Path::new(&self.env_path);
        if env_path.is_absolute() {
            env_path.to_path_buf()
        } else {
            config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(env_path)
        }
    }

    /// Build the trainer configuration, loading the environment file.
    pub fn to_train_config(&self, config_path: &Path) -> Result<TrainConfig, CliError> {
        let env_file = self.env_path_from(config_path);
        let env = EnvSpec::from_path(&env_file)
            .map_err(|e| CliError::Validation(format!("env_path {}: {e}", env_file.display())))?;
        let schedule = ScheduleSpec {
            kind: self.schedule.kind,
            mu_constant: self.schedule.mu,
            mu_max: self.schedule.mu_max,
            mu_min: self.schedule.mu_min,
            warmup_w: self.schedule.warmup_w,
            restarts_c: self.schedule.restarts_c,
            total_steps: self
                .schedule
                .total_steps
                .unwrap_or(self.trainer.steps as u32),
        };
        Ok(TrainConfig {
            env,
            group_size: self.group_size,
            advantage: AdvantageConfig {
                estimator: self.advantage.estimator,
                mu: self.advantage.mu,
                alpha: self.advantage.alpha,
                metric_name: self.advantage.metric.clone(),
                std_epsilon: self.advantage.std_epsilon,
            },
            schedule,
            shaping: self.shaping,
            learning_rate: self.trainer.lr,
            eps_low: self.trainer.eps_low,
            eps_high: self.trainer.eps_high,
            steps: self.trainer.steps,
            updates_per_rollout: self.trainer.updates_per_rollout,
            seed: self.seed,
        })
    }
}
