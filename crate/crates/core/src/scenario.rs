//! Flat, editor-friendly scene description shared by the CLI and the HTTP
//! service, plus the bundled scenario fixtures.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PitchPoint, PITCH_LENGTH, PITCH_WIDTH};
use crate::metrics::{Scene, ScenePlayer, Shooter};
use crate::nnet::UNKNOWN_ROLE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioShooter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPlayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub x: f64,
    pub y: f64,
    pub teammate: bool,
    #[serde(default)]
    pub keeper: bool,
}

/// A rejected field, addressed JSON-pointer style (`players/3/x`).
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[error("{path}: {message}")]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

fn check_coord(path: String, v: f64, max: f64) -> Result<(), FieldError> {
    if v.is_finite() && (0.0..=max).contains(&v) {
        Ok(())
    } else {
        Err(FieldError {
            path,
            message: format!("{v} outside [0, {max}]"),
        })
    }
}

/// Pitch bounds on every coordinate and at most one keeper per side.
pub fn validate(
    shooter: &ScenarioShooter,
    players: &[ScenarioPlayer],
    prefix: &str,
) -> Result<(), FieldError> {
    check_coord(format!("{prefix}shooter/x"), shooter.x, PITCH_LENGTH)?;
    check_coord(format!("{prefix}shooter/y"), shooter.y, PITCH_WIDTH)?;
    let mut keepers = [0usize; 2];
    for (i, p) in players.iter().enumerate() {
        check_coord(format!("{prefix}players/{i}/x"), p.x, PITCH_LENGTH)?;
        check_coord(format!("{prefix}players/{i}/y"), p.y, PITCH_WIDTH)?;
        if p.keeper {
            let side = &mut keepers[usize::from(p.teammate)];
            *side += 1;
            if *side > 1 {
                return Err(FieldError {
                    path: format!("{prefix}players/{i}/keeper"),
                    message: "second keeper on the same side".into(),
                });
            }
        }
    }
    Ok(())
}

pub fn to_scene(shooter: &ScenarioShooter, players: &[ScenarioPlayer]) -> Scene {
    Scene {
        shooter: Shooter {
            role: shooter
                .role
                .clone()
                .unwrap_or_else(|| UNKNOWN_ROLE.to_string()),
            location: PitchPoint::new(shooter.x, shooter.y),
        },
        players: players
            .iter()
            .map(|p| ScenePlayer {
                label: p.label.clone(),
                location: PitchPoint::new(p.x, p.y),
                teammate: p.teammate,
                keeper: p.keeper,
            })
            .collect(),
        covered: true,
    }
}

/// A published per-attacker row kept alongside a fixture for comparison.
/// `label` is a jersey number or "shooter"; the shooter has no control value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub label: String,
    pub p_on: f64,
    pub p_off: f64,
    pub p_block: f64,
    #[serde(default)]
    pub p_control: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFixture {
    pub id: String,
    pub description: String,
    pub shooter: ScenarioShooter,
    pub players: Vec<ScenarioPlayer>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference: Vec<ReferenceRow>,
}

impl ScenarioFixture {
    pub fn scene(&self) -> Scene {
        to_scene(&self.shooter, &self.players)
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{file}: {source}")]
    Invalid { file: String, source: FieldError },
    #[error("duplicate fixture id {0}")]
    Duplicate(String),
}

pub fn load_fixture(path: &Path) -> Result<ScenarioFixture, FixtureError> {
    let p = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| FixtureError::Io {
        path: p.clone(),
        message: e.to_string(),
    })?;
    let fx: ScenarioFixture = serde_json::from_str(&text).map_err(|source| FixtureError::Json {
        path: p.clone(),
        source,
    })?;
    validate(&fx.shooter, &fx.players, "")
        .map_err(|source| FixtureError::Invalid { file: p, source })?;
    Ok(fx)
}

/// Every `*.json` in `dir`, sorted by id.
pub fn load_fixtures(dir: &Path) -> Result<Vec<ScenarioFixture>, FixtureError> {
    let entries = fs::read_dir(dir).map_err(|e| FixtureError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| FixtureError::Io {
                path: dir.display().to_string(),
                message: e.to_string(),
            })?
            .path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(load_fixture(&path)?);
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    for w in out.windows(2) {
        if w[0].id == w[1].id {
            return Err(FixtureError::Duplicate(w[0].id.clone()));
        }
    }
    Ok(out)
}
