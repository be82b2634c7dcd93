use serde::{Deserialize, Serialize};

use crate::rollout::RolloutGroup;
use crate::sim::METRIC_LENGTH;
use crate::Result;

/// Length-based reward shaping applied per group before advantage
/// estimation. Correctness flags are never touched.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shaping {
    /// Rewards pass through unchanged.
    #[default]
    None,
    /// Responses longer than `cap` count as truncated and score 0.
    ClipLength { cap: f64 },
    /// R' = R + coeff * (mean_len / len - 1): bonus below the group mean
    /// length, penalty above it.
    Additive { coeff: f64 },
    /// R' = R * (1 - coeff * sigmoid((len - mean_len) / std_len)): scales the
    /// reward down smoothly with length above the group mean. A zero length
    /// spread makes the sigmoid argument 0.
    Multiplicative { coeff: f64 },
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Apply the shaping rule to one group, returning a copy with replaced
/// rewards.
pub fn shaped_rewards(group: &RolloutGroup, shaping: &Shaping) -> Result<RolloutGroup> {
    if matches!(shaping, Shaping::None) {
        return Ok(group.clone());
    }
    let lengths: Vec<f64> = group
        .responses()
        .iter()
        .map(|r| r.metric(METRIC_LENGTH))
        .collect::<Result<_>>()?;
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;

    let rewards: Vec<f64> = match *shaping {
        Shaping::None => unreachable!(),
        Shaping::ClipLength { cap } => group
            .responses()
            .iter()
            .zip(&lengths)
            .map(|(r, &len)| if len > cap { 0.0 } else { r.reward })
            .collect(),
        Shaping::Additive { coeff } => group
            .responses()
            .iter()
            .zip(&lengths)
            .map(|(r, &len)| r.reward + coeff * (mean / len - 1.0))
            .collect(),
        Shaping::Multiplicative { coeff } => {
            let var =
                lengths.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / lengths.len() as f64;
            let std = var.sqrt();
            group
                .responses()
                .iter()
                .zip(&lengths)
                .map(|(r, &len)| {
                    let z = if std > 0.0 { (len - mean) / std } else { 0.0 };
                    r.reward * (1.0 - coeff * sigmoid(z))
                })
                .collect()
        }
    };
    group.with_rewards(&rewards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rollout::ResponseRecord;

    fn group(rewards: &[f64], lengths: &[f64]) -> RolloutGroup {
        let responses = rewards
            .iter()
            .zip(lengths)
            .enumerate()
            .map(|(i, (&reward, &len))| ResponseRecord {
                response_id: format!("o{i}"),
                reward,
                correct: reward == 1.0,
                metrics: [(METRIC_LENGTH.to_string(), len)].into_iter().collect(),
            })
            .collect();
        RolloutGroup::new("q", responses).unwrap()
    }

    fn rewards(g: &RolloutGroup) -> Vec<f64> {
        g.responses().iter().map(|r| r.reward).collect()
    }

    #[test]
    fn additive_with_zero_coeff_is_identity() {
        let g = group(&[1.0, 0.0], &[100.0, 300.0]);
        let shaped = shaped_rewards(&g, &Shaping::Additive { coeff: 0.0 }).unwrap();
        assert_eq!(rewards(&shaped), rewards(&g));
    }

    #[test]
    fn additive_is_neutral_at_the_mean_length() {
        let g = group(&[1.0, 1.0], &[200.0, 200.0]);
        let shaped = shaped_rewards(&g, &Shaping::Additive { coeff: 0.004 }).unwrap();
        assert_eq!(rewards(&shaped), vec![1.0, 1.0]);
    }

    #[test]
    fn additive_rewards_shorter_responses() {
        let g = group(&[1.0, 1.0], &[100.0, 300.0]);
        let shaped = shaped_rewards(&g, &Shaping::Additive { coeff: 0.1 }).unwrap();
        let r = rewards(&shaped);
        // mean length 200: short gets +0.1, long gets -0.1/3
        assert!((r[0] - 1.1).abs() < 1e-12);
        assert!((r[1] - (1.0 - 0.1 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn multiplicative_at_group_mean_halves_the_coefficient() {
        // o2 and o4 sit exactly at the mean length 200: sigmoid(0) = 0.5, so
        // a correct response there keeps 1 - 0.2 * 0.5 = 0.9 of its reward
        let g = group(&[1.0, 1.0, 1.0, 1.0], &[100.0, 200.0, 300.0, 200.0]);
        let shaped = shaped_rewards(&g, &Shaping::Multiplicative { coeff: 0.2 }).unwrap();
        let r = rewards(&shaped);
        assert!((r[1] - 0.9).abs() < 1e-12);
        assert!((r[3] - 0.9).abs() < 1e-12);
        assert!(r[0] > 0.9 && r[2] < 0.9, "shorter keeps more, longer less");
    }

    #[test]
    fn multiplicative_zero_spread_defines_the_argument_as_zero() {
        let g = group(&[1.0, 1.0], &[200.0, 200.0]);
        let shaped = shaped_rewards(&g, &Shaping::Multiplicative { coeff: 0.2 }).unwrap();
        assert!(rewards(&shaped).iter().all(|&r| (r - 0.9).abs() < 1e-12));
    }

    #[test]
    fn clip_length_zeroes_rewards_beyond_cap_and_keeps_flags() {
        let g = group(&[1.0, 1.0], &[100.0, 900.0]);
        let shaped = shaped_rewards(&g, &Shaping::ClipLength { cap: 600.0 }).unwrap();
        assert_eq!(rewards(&shaped), vec![1.0, 0.0]);
        assert!(shaped.responses()[1].correct, "correct flag preserved");
    }

    #[test]
    fn shaping_requires_lengths() {
        let responses = vec![
            ResponseRecord {
                response_id: "a".into(),
                reward: 1.0,
                correct: true,
                metrics: Default::default(),
            },
            ResponseRecord {
                response_id: "b".into(),
                reward: 0.0,
                correct: false,
                metrics: Default::default(),
            },
        ];
        let g = RolloutGroup::new("q", responses).unwrap();
        assert!(shaped_rewards(&g, &Shaping::Additive { coeff: 0.1 }).is_err());
        assert!(shaped_rewards(&g, &Shaping::None).is_ok());
    }
}
