//! Engine configuration: analysis thresholds, profile overrides, service
//! address. Loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controller::ProfileTable;
use crate::model::DEFAULT_DELETION_THRESHOLD;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("threshold `{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("profile for {role}: {message}")]
    Profile { role: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Share of a generation's words found in its prompt context at which the
    /// generation counts as a tonal rewrite.
    pub tonal_overlap: f64,
    /// Shortest word run aligned with the prompt that is reported as
    /// prompt-derived.
    pub min_prompt_run: usize,
    /// Normalized word edit distance at which feedback counts as integrated.
    pub feedback_integration: f64,
    /// Share of an earlier generation's words that must reappear in a later
    /// prompt's context to link the two as iterations.
    pub chain_overlap: f64,
    /// Characters deleted from one AI node that seal a version.
    pub deletion: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tonal_overlap: 0.6,
            min_prompt_run: 3,
            feedback_integration: 0.15,
            chain_overlap: 0.5,
            deletion: DEFAULT_DELETION_THRESHOLD,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    name,
                    value,
                    range: "[0, 1]",
                })
            }
        };
        unit("tonal_overlap", self.tonal_overlap)?;
        unit("feedback_integration", self.feedback_integration)?;
        if !(self.chain_overlap > 0.0 && self.chain_overlap <= 1.0) {
            return Err(ConfigError::OutOfRange {
                name: "chain_overlap",
                value: self.chain_overlap,
                range: "(0, 1]",
            });
        }
        if self.min_prompt_run == 0 {
            return Err(ConfigError::OutOfRange {
                name: "min_prompt_run",
                value: 0.0,
                range: ">= 1",
            });
        }
        if self.deletion == 0 {
            return Err(ConfigError::OutOfRange {
                name: "deletion",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub thresholds: Thresholds,
    /// File with profile overrides, same format as the `[profiles]` table.
    pub profiles_path: Option<PathBuf>,
    pub listen: String,
    /// Profile overrides given inline.
    pub profiles: ProfileTable,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            profiles_path: None,
            listen: "127.0.0.1:8080".to_string(),
            profiles: ProfileTable::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    #[serde(default)]
    profiles: ProfileTable,
}

impl EngineConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut config: EngineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(rel) = config.profiles_path.clone() {
            let path = match origin.parent() {
                Some(dir) if rel.is_relative() => dir.join(rel),
                _ => rel,
            };
            let text = read(&path)?;
            let file: ProfileFile = toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?;
            config.profiles.merge(file.profiles);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&read(path)?, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.thresholds.validate()?;
        self.profiles.validate()
    }

    /// Hex SHA-256 over everything that influences replay and schema output.
    pub fn fingerprint(&self) -> String {
        let material = serde_json::json!({
            "thresholds": self.thresholds,
            "profiles": self.profiles.resolved(),
        });
        let bytes = crate::schema_io::canonical_json(&material);
        hex::encode(Sha256::digest(bytes.as_bytes()))
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}
