//! Feature rows for the outcome classifiers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ang2goal, dist2goal, PitchPoint, PITCH_LENGTH};
use crate::ingest::{FreezeFrame, Outcome, PlayerSnapshot, ShotEvent};
use crate::theory::{PreparedShot, TheoryError, TheoryParams};

pub const UNKNOWN_ROLE: &str = "Unknown";
pub const FRAME_SLOTS: usize = 22;
pub const SLOT_WIDTH: usize = 4;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("freeze frame has {0} players, at most 22 fit the unprocessed layout")]
    FrameTooLarge(usize),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// Which input set a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    /// Shooter features, label = shot off target.
    Off,
    /// Shooter features plus the theory block probability, label = blocked.
    Block,
    /// Shooter features only, label = blocked.
    BlockBasic,
    /// Shooter features plus the raw 22x4 frame block, label = blocked.
    BlockUnprocessed,
}

impl FeatureKind {
    pub fn numeric_len(self) -> usize {
        match self {
            FeatureKind::Off | FeatureKind::BlockBasic => 4,
            FeatureKind::Block => 5,
            FeatureKind::BlockUnprocessed => 4 + FRAME_SLOTS * SLOT_WIDTH,
        }
    }

    pub fn label(self, outcome: Outcome) -> bool {
        match self {
            FeatureKind::Off => outcome == Outcome::Off,
            _ => outcome == Outcome::Block,
        }
    }

    pub fn needs_theory(self) -> bool {
        self == FeatureKind::Block
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub role: String,
    pub numeric: Vec<f64>,
    pub label: bool,
}

/// Location, distance and angle to goal.
pub fn shooter_numeric(loc: PitchPoint) -> Vec<f64> {
    vec![loc.x, loc.y, dist2goal(loc), ang2goal(loc)]
}

/// Zero-filled 22x4 block: teammates by distance, then opponents by distance.
pub fn unprocessed_block(
    shooter: PitchPoint,
    players: &[PlayerSnapshot],
) -> Result<Vec<f64>, FeatureError> {
    if players.len() > FRAME_SLOTS {
        return Err(FeatureError::FrameTooLarge(players.len()));
    }
    let mut ordered: Vec<&PlayerSnapshot> = players.iter().collect();
    ordered.sort_by(|a, b| {
        b.teammate
            .cmp(&a.teammate)
            .then(
                shooter
                    .metric_distance(a.location)
                    .total_cmp(&shooter.metric_distance(b.location)),
            )
            .then(a.location.x.total_cmp(&b.location.x))
            .then(a.location.y.total_cmp(&b.location.y))
    });
    let mut out = vec![0.0; FRAME_SLOTS * SLOT_WIDTH];
    for (slot, p) in ordered.iter().enumerate() {
        let base = slot * SLOT_WIDTH;
        out[base + 1] = p.location.x;
        out[base + 2] = p.location.y;
        out[base + 3] = if p.teammate { 1.0 } else { 0.0 };
    }
    Ok(out)
}

/// Features for a hypothetical shooter at `loc`; `players` is the frame it
/// shoots into (`None` when there is no 360 coverage).
pub fn features_for(
    kind: FeatureKind,
    loc: PitchPoint,
    players: Option<&[PlayerSnapshot]>,
    theory: &TheoryParams,
) -> Result<Vec<f64>, FeatureError> {
    let mut numeric = shooter_numeric(loc);
    match kind {
        FeatureKind::Off | FeatureKind::BlockBasic => {}
        FeatureKind::Block => {
            numeric.push(theory_feature(loc, players, theory)?);
        }
        FeatureKind::BlockUnprocessed => {
            numeric.extend(unprocessed_block(loc, players.unwrap_or(&[]))?);
        }
    }
    Ok(numeric)
}

/// Theory block probability; 0 without a frame (same as an empty defender
/// set) and for a shooter on or past the goal line, whose zone is empty.
pub fn theory_feature(
    loc: PitchPoint,
    players: Option<&[PlayerSnapshot]>,
    theory: &TheoryParams,
) -> Result<f64, FeatureError> {
    match players {
        Some(players) if loc.x < PITCH_LENGTH => {
            Ok(PreparedShot::new(loc, players)?.probability(theory)?)
        }
        _ => Ok(0.0),
    }
}

pub fn build_features_off(event: &ShotEvent) -> FeatureRow {
    FeatureRow {
        role: event.shooter_role.clone(),
        numeric: shooter_numeric(event.location),
        label: FeatureKind::Off.label(event.outcome),
    }
}

pub fn build_features_block(
    event: &ShotEvent,
    frame: Option<&FreezeFrame>,
    theory: &TheoryParams,
) -> Result<FeatureRow, FeatureError> {
    build_row(FeatureKind::Block, event, frame, theory)
}

pub fn build_features_unprocessed(
    event: &ShotEvent,
    frame: Option<&FreezeFrame>,
) -> Result<FeatureRow, FeatureError> {
    build_row(
        FeatureKind::BlockUnprocessed,
        event,
        frame,
        &TheoryParams::default(),
    )
}

pub fn build_row(
    kind: FeatureKind,
    event: &ShotEvent,
    frame: Option<&FreezeFrame>,
    theory: &TheoryParams,
) -> Result<FeatureRow, FeatureError> {
    let players = frame.map(|f| f.players.as_slice());
    Ok(FeatureRow {
        role: event.shooter_role.clone(),
        numeric: features_for(kind, event.location, players, theory)?,
        label: kind.label(event.outcome),
    })
}

/// Role vocabulary; index 0 is reserved for roles never seen in training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleVocab {
    pub roles: Vec<String>,
}

impl RoleVocab {
    pub fn from_rows(rows: &[FeatureRow]) -> Self {
        let mut seen: Vec<String> = rows
            .iter()
            .map(|r| r.role.clone())
            .filter(|r| r != UNKNOWN_ROLE)
            .collect();
        seen.sort();
        seen.dedup();
        let mut roles = vec![UNKNOWN_ROLE.to_string()];
        roles.extend(seen);
        Self { roles }
    }

    pub fn index(&self, role: &str) -> usize {
        self.roles[1..]
            .binary_search_by(|r| r.as_str().cmp(role))
            .map(|i| i + 1)
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Per-column z-scoring fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[FeatureRow]) -> Self {
        let d = rows.first().map_or(0, |r| r.numeric.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(&r.numeric) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(&r.numeric).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}
