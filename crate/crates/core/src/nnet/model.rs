//! Trained classifier bundle: network, role vocabulary, standardization and
//! the feature set it expects.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::{FeatureKind, FeatureRow, RoleVocab, Standardizer};
use super::mlp::Mlp;
use super::train::TrainConfig;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to access {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed model file {path}: {message}")]
    Format { path: String, message: String },
    #[error("unsupported model file version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub version: u32,
    pub kind: FeatureKind,
    pub config: TrainConfig,
    pub vocab: RoleVocab,
    pub standardizer: Standardizer,
    pub net: Mlp,
}

impl ClassifierModel {
    /// Probability of the positive label for raw (unstandardized) features.
    pub fn predict(&self, role: &str, numeric: &[f64]) -> f64 {
        let x = self.standardizer.apply(numeric);
        self.net.predict(self.vocab.index(role), &x)
    }

    pub fn predict_row(&self, row: &FeatureRow) -> f64 {
        self.predict(&row.role, &row.numeric)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, ModelError> {
        let m: ClassifierModel = serde_json::from_str(text).map_err(|e| ModelError::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if m.version != MODEL_VERSION {
            return Err(ModelError::Version(m.version));
        }
        let checked = Mlp::from_params(m.net.arch.clone(), m.net.params.clone());
        if let Err(e) = checked {
            return Err(ModelError::Format {
                path: origin.to_string(),
                message: e.to_string(),
            });
        }
        if m.net.arch.n_numeric != m.kind.numeric_len() || m.net.arch.n_roles != m.vocab.len() {
            return Err(ModelError::Format {
                path: origin.to_string(),
                message: "architecture does not match feature kind or vocabulary".into(),
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_json() + "\n").map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(|e| ModelError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, &path.display().to_string())
    }
}
