//! Operator configuration file (TOML).
//!
//! Everything is optional; omitted keys fall back to the same defaults the
//! library uses. A config file is the only way the CLI overrides policy
//! and surrogate parameters, so the sections mirror those types directly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SelectionPolicy;
use crate::predictor::{RankCriterion, SurrogateConfig};
use crate::simulator::MixOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorSection {
    /// Remote predictor endpoint; absent means the local surrogate.
    pub endpoint: Option<String>,
    /// Remote request timeout, seconds.
    pub timeout: f64,
    pub criterion: RankCriterion,
}

impl Default for PredictorSection {
    fn default() -> Self {
        PredictorSection {
            endpoint: None,
            timeout: crate::predictor::DEFAULT_TIMEOUT.as_secs_f64(),
            criterion: RankCriterion::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsSection {
    /// Sampling step of LAF series, seconds.
    pub laf_step: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection { laf_step: 0.1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub policy: SelectionPolicy,
    pub surrogate: SurrogateConfig,
    pub predictor: PredictorSection,
    pub simulator: MixOptions,
    pub metrics: MetricsSection,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

pub fn load_config(path: &Path) -> Result<AppConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    AppConfig::from_toml(&text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source,
    })
}
