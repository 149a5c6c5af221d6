//! TOML run configuration. Every field is optional; command-line flags
//! override file values, which override built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub datasets: DatasetPaths,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub mgt: MgtConfig,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub d1: Option<PathBuf>,
    pub d2: Option<PathBuf>,
    pub d3: Option<PathBuf>,
    pub d4: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// "flat" or "hierarchical".
    pub kind: Option<String>,
    pub c_grid: Option<Vec<f64>>,
    pub epochs: Option<u32>,
    pub seed: Option<u64>,
    pub min_df: Option<usize>,
    pub max_vocab: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgtConfig {
    pub model: Option<String>,
    pub max_tokens: Option<u32>,
    pub threshold_pct: Option<f64>,
    pub reengineered: Option<bool>,
    pub seed: Option<u64>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn model_kind(&self) -> Result<Option<crate::ModelKind>, CliError> {
        match self.model.kind.as_deref() {
            None => Ok(None),
            Some("flat") => Ok(Some(crate::ModelKind::Flat)),
            Some("hierarchical") => Ok(Some(crate::ModelKind::Hierarchical)),
            Some(other) => Err(CliError::Validation(format!(
                "config model.kind must be \"flat\" or \"hierarchical\", got {other:?}"
            ))),
        }
    }
}
