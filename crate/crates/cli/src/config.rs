//! JSON run configuration. Command-line flags take precedence over file values,
//! which take precedence over built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pucs_core::ingest::IngestParams;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    /// `"linear"`: `alpha(i) = i / I`.
    Named(String),
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentSource {
    Preset(String),
    /// Environment JSON file.
    Path(PathBuf),
    /// Trip CSV ingested with `ingest` parameters.
    Dataset(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub environment: Option<EnvironmentSource>,
    pub ingest: Option<IngestParams>,
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    #[serde(rename = "I")]
    pub budget: Option<usize>,
    pub alpha: Option<AlphaSpec>,
    pub delta: Option<f64>,
    #[serde(rename = "W")]
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub algorithms: Option<Vec<String>>,
    pub expectation: Option<String>,
    pub eval_samples: Option<usize>,
    pub checkpoints: Option<Vec<usize>>,
    pub clamp_ucb: Option<bool>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Expands an alpha spec; `"linear"` needs the budget.
pub fn expand_alpha(spec: &AlphaSpec, budget: Option<usize>) -> Result<Vec<f64>, CliError> {
    match spec {
        AlphaSpec::Table(v) => Ok(v.clone()),
        AlphaSpec::Named(name) if name == "linear" => {
            let i = budget.ok_or_else(|| CliError::Usage("alpha \"linear\" needs the probe budget I".into()))?;
            if i == 0 {
                return Err(CliError::Usage("probe budget I must be at least 1".into()));
            }
            Ok((0..=i).map(|k| k as f64 / i as f64).collect())
        }
        AlphaSpec::Named(other) => {
            let values: Result<Vec<f64>, _> = other.split(',').map(|s| s.trim().parse::<f64>()).collect();
            values.map_err(|_| CliError::Usage(format!("alpha must be \"linear\" or a comma list, got `{other}`")))
        }
    }
}

pub fn parse_alpha_flag(s: &str) -> AlphaSpec {
    AlphaSpec::Named(s.to_string())
}
