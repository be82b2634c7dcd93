use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One latent response strategy: a success probability plus the metric
/// distributions of responses produced with it. Entropy draws are truncated
/// at 0, length draws at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub name: String,
    pub success_prob: f64,
    pub entropy_mean: f64,
    pub entropy_std: f64,
    pub length_mean: f64,
    pub length_std: f64,
}

/// A query with its candidate strategies (at least two).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub query_id: String,
    pub strategies: Vec<StrategySpec>,
}

/// The whole synthetic environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub queries: Vec<QuerySpec>,
}

impl EnvSpec {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path.as_ref())?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let env: EnvSpec = serde_json::from_reader(reader)?;
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.queries.is_empty() {
            return Err(Error::InvalidConfig("environment has no queries".into()));
        }
        for q in &self.queries {
            if q.strategies.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "query {}: needs at least 2 strategies, got {}",
                    q.query_id,
                    q.strategies.len()
                )));
            }
            for s in &q.strategies {
                let fields = [
                    ("success_prob", s.success_prob),
                    ("entropy_mean", s.entropy_mean),
                    ("entropy_std", s.entropy_std),
                    ("length_mean", s.length_mean),
                    ("length_std", s.length_std),
                ];
                for (name, v) in fields {
                    if !v.is_finite() {
                        return Err(Error::InvalidConfig(format!(
                            "query {} strategy {}: {name} is not finite",
                            q.query_id, s.name
                        )));
                    }
                }
                if !(0.0..=1.0).contains(&s.success_prob) {
                    return Err(Error::InvalidConfig(format!(
                        "query {} strategy {}: success_prob must be within [0, 1], got {}",
                        q.query_id, s.name, s.success_prob
                    )));
                }
                if s.entropy_mean < 0.0 || s.entropy_std < 0.0 || s.length_std < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "query {} strategy {}: distribution parameters must be non-negative",
                        q.query_id, s.name
                    )));
                }
                if s.length_mean < 1.0 {
                    return Err(Error::InvalidConfig(format!(
                        "query {} strategy {}: length_mean must be at least 1, got {}",
                        q.query_id, s.name, s.length_mean
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_strategy_env() -> EnvSpec {
        EnvSpec {
            queries: vec![QuerySpec {
                query_id: "q0".into(),
                strategies: vec![
                    StrategySpec {
                        name: "a".into(),
                        success_prob: 0.8,
                        entropy_mean: 0.5,
                        entropy_std: 0.1,
                        length_mean: 100.0,
                        length_std: 10.0,
                    },
                    StrategySpec {
                        name: "b".into(),
                        success_prob: 0.2,
                        entropy_mean: 2.0,
                        entropy_std: 0.1,
                        length_mean: 400.0,
                        length_std: 10.0,
                    },
                ],
            }],
        }
    }

    #[test]
    fn validation_catches_single_strategy_queries() {
        let mut env = two_strategy_env();
        env.queries[0].strategies.truncate(1);
        assert!(env.validate().is_err());
    }

    #[test]
    fn validation_catches_bad_success_prob() {
        let mut env = two_strategy_env();
        env.queries[0].strategies[0].success_prob = 1.5;
        assert!(env.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"queries": [], "extra": 1}"#;
        assert!(EnvSpec::from_reader(json.as_bytes()).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let env = two_strategy_env();
        let text = serde_json::to_string(&env).unwrap();
        let back = EnvSpec::from_reader(text.as_bytes()).unwrap();
        assert_eq!(env, back);
    }
}
