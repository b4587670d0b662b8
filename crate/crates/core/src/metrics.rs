//! Shot-on-target metrics for the shooter (xSOT) and for the best pass
//! option (xOSOT), with the counterfactual that deletes the closest defender.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{self, NashSolution, PayoffTable};
use crate::geometry::{defender_angle_distance, PitchPoint};
use crate::ingest::{FreezeFrame, PlayerSnapshot, ShotEvent};
use crate::nnet::features::{features_for, theory_feature, FeatureError, FeatureKind};
use crate::nnet::{ClassifierModel, UNKNOWN_ROLE};
use crate::pitch_control::{ball_travel_time, ppcf_at, Competitor, ControlError, ControlParams};
use crate::theory::{PreparedShot, TheoryError, TheoryParams};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("{which} model expects {expected:?} features, got a {got:?} model")]
    ModelKind {
        which: &'static str,
        expected: &'static str,
        got: FeatureKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shooter {
    pub role: String,
    pub location: PitchPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePlayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub location: PitchPoint,
    pub teammate: bool,
    #[serde(default)]
    pub keeper: bool,
}

/// A shot-taking situation: the shooter plus everyone else visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub shooter: Shooter,
    pub players: Vec<ScenePlayer>,
    /// False for shots without 360 coverage: block features fall back to the
    /// empty-frame value and there are no pass options.
    #[serde(default = "yes")]
    pub covered: bool,
}

fn yes() -> bool {
    true
}

impl Scene {
    pub fn from_event(event: &ShotEvent, frame: Option<&FreezeFrame>) -> Self {
        let players = frame
            .map(|f| {
                f.players
                    .iter()
                    .filter(|p| !p.actor)
                    .map(|p| ScenePlayer {
                        label: None,
                        location: p.location,
                        teammate: p.teammate,
                        keeper: p.keeper,
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self {
            shooter: Shooter {
                role: event.shooter_role.clone(),
                location: event.location,
            },
            players,
            covered: frame.is_some(),
        }
    }

    /// Frame snapshots with the shooter as actor.
    pub fn snapshots(&self) -> Vec<PlayerSnapshot> {
        let mut out = vec![PlayerSnapshot {
            location: self.shooter.location,
            teammate: true,
            actor: true,
            keeper: false,
        }];
        out.extend(self.players.iter().map(|p| PlayerSnapshot {
            location: p.location,
            teammate: p.teammate,
            actor: false,
            keeper: p.keeper,
        }));
        out
    }

    pub fn without(&self, index: Option<usize>) -> Scene {
        let mut s = self.clone();
        if let Some(i) = index {
            s.players.remove(i);
        }
        s
    }
}

/// Nearest non-keeper opponent; ties go to the smaller angle from the
/// left-post ray.
pub fn closest_defender(shooter: PitchPoint, players: &[ScenePlayer]) -> Option<usize> {
    let key = |p: &ScenePlayer| {
        let d = shooter.metric_distance(p.location);
        let theta = defender_angle_distance(shooter, p.location)
            .map(|(t, _)| t)
            .unwrap_or(f64::NEG_INFINITY);
        (d, theta)
    };
    players
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.teammate && !p.keeper)
        .min_by(|(ia, a), (ib, b)| {
            let (da, ta) = key(a);
            let (db, tb) = key(b);
            if (da - db).abs() <= 1e-12 {
                ta.total_cmp(&tb).then(ia.cmp(ib))
            } else {
                da.total_cmp(&db)
            }
        })
        .map(|(i, _)| i)
}

/// `1 - min(p_off + p_block, 1)`.
pub fn xsot_value(p_off: f64, p_block: f64) -> f64 {
    1.0 - (p_off + p_block).min(1.0)
}

/// `xSOT * p_control`.
pub fn compose_p_on(p_off: f64, p_block: f64, p_control: f64) -> f64 {
    xsot_value(p_off, p_block) * p_control
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotBreakdown {
    pub p_off: f64,
    pub p_block: f64,
    /// Theory block probability fed to the block model.
    pub theory_block: f64,
    pub xsot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerBreakdown {
    /// Index into the scene's player list.
    pub player: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub location: PitchPoint,
    pub p_on: f64,
    pub p_off: f64,
    pub p_block: f64,
    pub p_control: f64,
    pub theory_block: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XosotResult {
    pub value: f64,
    /// Position of the best attacker within `attackers`.
    pub best: Option<usize>,
    pub attackers: Vec<AttackerBreakdown>,
    /// True when the scene had no off-ball teammate to pass to.
    pub no_teammates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEvaluation {
    pub closest_defender: Option<usize>,
    pub shot: ShotBreakdown,
    pub shot_without_closest: ShotBreakdown,
    pub pass: XosotResult,
    pub pass_without_closest: XosotResult,
    pub payoff: PayoffTable,
    pub nash: NashSolution,
}

impl SceneEvaluation {
    pub fn max_prob(&self) -> f64 {
        self.shot.xsot.max(self.pass.value)
    }
}

/// Trained models and parameters needed to score a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    pub off: ClassifierModel,
    pub block: ClassifierModel,
    pub theory: TheoryParams,
    pub control: ControlParams,
}

impl Engine {
    pub fn new(
        off: ClassifierModel,
        block: ClassifierModel,
        theory: TheoryParams,
        control: ControlParams,
    ) -> Result<Self, MetricsError> {
        if off.kind != FeatureKind::Off {
            return Err(MetricsError::ModelKind {
                which: "shot-off",
                expected: "off",
                got: off.kind,
            });
        }
        if block.kind == FeatureKind::Off {
            return Err(MetricsError::ModelKind {
                which: "shot-block",
                expected: "block",
                got: block.kind,
            });
        }
        theory.validate()?;
        control.validate()?;
        Ok(Self {
            off,
            block,
            theory,
            control,
        })
    }

    /// Off and block estimates for a shooter at `loc` facing `players`.
    pub fn shot_at(
        &self,
        role: &str,
        loc: PitchPoint,
        players: Option<&[PlayerSnapshot]>,
    ) -> Result<ShotBreakdown, MetricsError> {
        let off_x = features_for(FeatureKind::Off, loc, players, &self.theory)?;
        let block_x = features_for(self.block.kind, loc, players, &self.theory)?;
        let theory_block = theory_feature(loc, players, &self.theory)?;
        let p_off = self.off.predict(role, &off_x);
        let p_block = self.block.predict(role, &block_x);
        Ok(ShotBreakdown {
            p_off,
            p_block,
            theory_block,
            xsot: xsot_value(p_off, p_block),
        })
    }

    pub fn xsot(&self, scene: &Scene, remove_closest: bool) -> Result<ShotBreakdown, MetricsError> {
        let scene = self.counterfactual(scene, remove_closest);
        let snaps = scene.snapshots();
        let players = scene.covered.then_some(snaps.as_slice());
        self.shot_at(&scene.shooter.role, scene.shooter.location, players)
    }

    fn counterfactual(&self, scene: &Scene, remove_closest: bool) -> Scene {
        if remove_closest {
            scene.without(closest_defender(scene.shooter.location, &scene.players))
        } else {
            scene.clone()
        }
    }

    /// Best pass option. Every off-ball teammate (keepers excluded) is scored
    /// as a shooter with unknown role, weighted by its control probability
    /// for a ball from the shooter; everyone but the passer competes.
    pub fn xosot(&self, scene: &Scene, remove_closest: bool) -> Result<XosotResult, MetricsError> {
        let scene = self.counterfactual(scene, remove_closest);
        let snaps = scene.snapshots();
        let competitors: Vec<Competitor> = scene
            .players
            .iter()
            .map(|p| Competitor {
                location: p.location,
                teammate: p.teammate,
            })
            .collect();
        let mut attackers = Vec::new();
        if scene.covered {
            for (i, p) in scene.players.iter().enumerate() {
                if !p.teammate || p.keeper {
                    continue;
                }
                let shot = self.shot_at(UNKNOWN_ROLE, p.location, Some(&snaps))?;
                let t = ball_travel_time(scene.shooter.location, p.location, &self.control);
                let control = ppcf_at(p.location, &competitors, t, &self.control, self.control.dt)?;
                let p_control = control.per_player[i];
                attackers.push(AttackerBreakdown {
                    player: i,
                    label: p.label.clone(),
                    location: p.location,
                    p_on: shot.xsot * p_control,
                    p_off: shot.p_off,
                    p_block: shot.p_block,
                    p_control,
                    theory_block: shot.theory_block,
                });
            }
        }
        let best = attackers
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (k, a)| match acc {
                Some((_, v)) if v >= a.p_on => acc,
                _ => Some((k, a.p_on)),
            })
            .map(|(k, _)| k);
        Ok(XosotResult {
            value: best.map_or(0.0, |k| attackers[k].p_on),
            best,
            no_teammates: attackers.is_empty(),
            attackers,
        })
    }

    /// All four payoff entries and the game solution.
    pub fn evaluate(&self, scene: &Scene) -> Result<SceneEvaluation, MetricsError> {
        let shot = self.xsot(scene, false)?;
        let shot_without_closest = self.xsot(scene, true)?;
        let pass = self.xosot(scene, false)?;
        let pass_without_closest = self.xosot(scene, true)?;
        let payoff = PayoffTable::new(
            shot.xsot,
            shot_without_closest.xsot,
            pass.value,
            pass_without_closest.value,
        );
        Ok(SceneEvaluation {
            closest_defender: closest_defender(scene.shooter.location, &scene.players),
            nash: game::solve(&payoff),
            shot,
            shot_without_closest,
            pass,
            pass_without_closest,
            payoff,
        })
    }

    /// `(theta, P(block | theta))` over the shooter's feasible span.
    pub fn block_curve(&self, scene: &Scene) -> Result<Vec<(f64, f64)>, MetricsError> {
        if scene.shooter.location.x >= crate::geometry::PITCH_LENGTH {
            return Ok(Vec::new());
        }
        let snaps = scene.snapshots();
        let players: &[PlayerSnapshot] = if scene.covered { &snaps } else { &[] };
        Ok(PreparedShot::new(scene.shooter.location, players)?.curve(&self.theory)?)
    }
}
