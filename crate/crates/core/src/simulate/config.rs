//! JSON configuration for simulation and error-rate studies.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "replications": 100000,
//!   "process": {
//!     "rate": 2.0, "exposure": 3.0,
//!     "severity": {"components": [{"weight": 1.0, "kind": "constant", "value": 1.0}]}
//!   },
//!   "loss_class_boundaries": [1, 2, 4, 8, 16, 32],
//!   "study": {
//!     "procedure": {"type": "rate_ratio_p", "probable": 0.1, "potential": 0.25},
//!     "rate_ref": 1.0, "rate_target_null": 1.0, "rate_target_alt": 5.0,
//!     "exposure_ref": 4.0, "exposure_target": 1.0,
//!     "decision_counted": "probable_or_worse",
//!     "alt_sweep": [1.0, 2.0, 3.0]
//!   }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::error_rates::{DecisionCounted, ErrorRateStudy, Procedure};
use super::CompoundPoissonSpec;

pub const DEFAULT_REPLICATIONS: u64 = 100_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub procedure: Procedure,
    pub rate_ref: f64,
    pub rate_target_null: f64,
    pub rate_target_alt: f64,
    pub exposure_ref: f64,
    pub exposure_target: f64,
    #[serde(default)]
    pub decision_counted: DecisionCounted,
    #[serde(default)]
    pub alt_sweep: Vec<f64>,
}

impl StudyConfig {
    pub fn to_study(&self, replications: u64) -> ErrorRateStudy {
        ErrorRateStudy {
            procedure: self.procedure,
            rate_ref: self.rate_ref,
            rate_target_null: self.rate_target_null,
            rate_target_alt: self.rate_target_alt,
            exposure_ref: self.exposure_ref,
            exposure_target: self.exposure_target,
            decision_counted: self.decision_counted,
            replications,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replications: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub process: Option<CompoundPoissonSpec>,
    #[serde(default)]
    pub loss_class_boundaries: Option<[f64; 6]>,
    #[serde(default)]
    pub study: Option<StudyConfig>,
}

impl SimulationConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SimulationConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, e: crate::Error| ConfigError::Invalid {
            field: field.to_string(),
            message: e.to_string(),
        };
        if let Some(process) = &self.process {
            process.validate().map_err(|e| invalid("process", e))?;
        }
        if self.replications == Some(0) {
            return Err(ConfigError::Invalid {
                field: "replications".into(),
                message: "must be at least 1".into(),
            });
        }
        if let Some(b) = &self.loss_class_boundaries {
            super::loss_class_histogram(&[], b).map_err(|e| invalid("loss_class_boundaries", e))?;
        }
        if let Some(study) = &self.study {
            let s = study.to_study(self.replications.unwrap_or(DEFAULT_REPLICATIONS));
            s.validate().map_err(|e| invalid("study", e))?;
            for (i, &alt) in study.alt_sweep.iter().enumerate() {
                if !(alt >= 0.0) || !alt.is_finite() {
                    return Err(ConfigError::Invalid {
                        field: format!("study.alt_sweep[{i}]"),
                        message: format!("rate must be finite and non-negative, got {alt}"),
                    });
                }
            }
        }
        Ok(())
    }
}
