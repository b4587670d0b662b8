use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use shotgame_core::optim::Method;

/// Which hyperparameter sets `train` searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridChoice {
    /// Only the published configuration for the model.
    Reference,
    /// All 243 combinations.
    Full,
}

impl std::str::FromStr for GridChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference" => Ok(GridChoice::Reference),
            "full" => Ok(GridChoice::Full),
            other => Err(format!(
                "unknown grid {other:?} (expected reference or full)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub models_dir: PathBuf,
    pub fixtures_dir: PathBuf,
    pub teams_csv: PathBuf,
    pub contingency: PathBuf,
    pub out: PathBuf,
    /// Training seed.
    pub seed: u64,
    pub split_seed: u64,
    pub method: Method,
    pub grid: GridChoice,
    /// Override for the training epoch budget.
    pub epochs: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub dt: f64,
    pub threshold: f64,
    pub port: u16,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: "data/fixtures/corpus".into(),
            models_dir: "models".into(),
            fixtures_dir: "data/scenarios".into(),
            teams_csv: "data/teams_xg.csv".into(),
            contingency: "data/fixtures/contingency.json".into(),
            out: "out".into(),
            seed: 0,
            split_seed: shotgame_core::ingest::DEFAULT_SPLIT_SEED,
            method: Method::Powell,
            grid: GridChoice::Reference,
            epochs: None,
            tol: 1e-8,
            max_iter: 200,
            dt: 0.04,
            threshold: 0.5,
            port: 8080,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return Err("max_iter must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(format!("dt must lie in (0, 1], got {}", self.dt));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            ));
        }
        if self.epochs == Some(0) {
            return Err("epochs must be at least 1".into());
        }
        Ok(())
    }
}

/// Everything needed to trace an output back to its inputs. No timestamps,
/// so identical runs write identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: &'a RunConfig,
    pub versions: Versions,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub dataset: u32,
    pub model: u32,
    pub theory_params: u32,
    pub schema: u32,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            dataset: shotgame_core::ingest::DATASET_VERSION,
            model: shotgame_core::nnet::model::MODEL_VERSION,
            theory_params: shotgame_core::theory::PARAMS_VERSION,
            schema: shotgame_service::SCHEMA_VERSION,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seed": 1, "sede": 2}"#).unwrap_err();
        assert!(err.to_string().contains("sede"));
        let ok: RunConfig = serde_json::from_str(r#"{"seed": 3, "method": "fd-cg"}"#).unwrap();
        assert_eq!(ok.seed, 3);
        assert_eq!(ok.method, Method::FdCg);
        assert_eq!(ok.dt, 0.04);
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            threshold: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
