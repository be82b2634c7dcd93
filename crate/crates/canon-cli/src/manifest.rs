use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Everything needed to reproduce a run: the resolved config snapshot plus
/// the artifact paths. `duration_seconds` is wall-clock and is the only
/// field that varies between identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub seed: u64,
    pub config: RunConfig,
    pub artifacts: Artifacts,
    pub duration_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifacts {
    pub csv: String,
    pub svg: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}
