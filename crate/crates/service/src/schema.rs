//! Wire types for scenario evaluation and the pure function behind
//! `POST /scenario/evaluate`.

use serde::{Deserialize, Serialize};

use shotgame_core::game::{
    deviation_gain, profile_gain, DefenderStrategy, NashSolution, PayoffTable, ShooterStrategy,
};
use shotgame_core::metrics::{
    AttackerBreakdown, Engine, MetricsError, Scene, ShotBreakdown, XosotResult,
};
use shotgame_core::scenario::{to_scene, validate, FieldError, ScenarioPlayer, ScenarioShooter};
use shotgame_core::theory::TheoryParams;

pub const SCHEMA_VERSION: u32 = 1;

/// Round to 6 decimals so responses diff cleanly.
pub fn r6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    /// Report breakdowns and the block curve for the frame without the
    /// closest defender (the Not Blocking column).
    #[serde(default)]
    pub remove_closest: bool,
    #[serde(default)]
    pub theory_params_override: Option<TheoryParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    pub shooter: ScenarioShooter,
    #[serde(default)]
    pub players: Vec<ScenarioPlayer>,
    #[serde(default)]
    pub options: ScenarioOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShooterView {
    pub p_on: f64,
    pub p_off: f64,
    pub p_block: f64,
    pub theory_block: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerView {
    /// Index into the request's `players`.
    pub player: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub x: f64,
    pub y: f64,
    pub p_on: f64,
    pub p_off: f64,
    pub p_block: f64,
    pub p_control: f64,
    pub theory_block: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassTarget {
    pub player: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffRow {
    pub blocking: f64,
    pub not_blocking: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffView {
    pub shoot: PayoffRow,
    pub pass: PayoffRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileView {
    pub shooter: String,
    pub defender: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedView {
    pub p_shoot: f64,
    pub q_block: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashView {
    pub pure: Vec<ProfileView>,
    pub mixed: Option<MixedView>,
    /// Largest gain any player gets by deviating unilaterally (0 at an
    /// equilibrium, up to tie tolerance).
    pub max_deviation_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResponse {
    pub schema_version: u32,
    /// Shooter xSOT with every defender in place.
    pub xsot: f64,
    pub xosot: f64,
    pub no_teammates: bool,
    pub best_pass_target: Option<PassTarget>,
    pub closest_defender: Option<usize>,
    /// Which frame the breakdowns below describe.
    pub view: String,
    pub shooter: ShooterView,
    /// Ordered by p_on, highest first.
    pub attackers: Vec<AttackerView>,
    pub payoff_table: PayoffView,
    pub nash: NashView,
    /// `[theta, P(block | theta)]` on the integration grid.
    pub theory_block_curve: Vec<[f64; 2]>,
}

#[derive(Debug)]
pub enum EvalError {
    Field(FieldError),
    Model(MetricsError),
}

impl From<FieldError> for EvalError {
    fn from(e: FieldError) -> Self {
        EvalError::Field(e)
    }
}

impl From<MetricsError> for EvalError {
    fn from(e: MetricsError) -> Self {
        EvalError::Model(e)
    }
}

fn shooter_view(s: &ShotBreakdown) -> ShooterView {
    ShooterView {
        p_on: r6(s.xsot),
        p_off: r6(s.p_off),
        p_block: r6(s.p_block),
        theory_block: r6(s.theory_block),
    }
}

fn attacker_view(a: &AttackerBreakdown) -> AttackerView {
    AttackerView {
        player: a.player,
        label: a.label.clone(),
        x: r6(a.location.x),
        y: r6(a.location.y),
        p_on: r6(a.p_on),
        p_off: r6(a.p_off),
        p_block: r6(a.p_block),
        p_control: r6(a.p_control),
        theory_block: r6(a.theory_block),
    }
}

fn strategy_names(s: ShooterStrategy, d: DefenderStrategy) -> ProfileView {
    let shooter = match s {
        ShooterStrategy::Shoot => "shoot",
        ShooterStrategy::Pass => "pass",
    };
    let defender = match d {
        DefenderStrategy::Blocking => "blocking",
        DefenderStrategy::NotBlocking => "not_blocking",
    };
    ProfileView {
        shooter: shooter.into(),
        defender: defender.into(),
    }
}

fn nash_view(table: &PayoffTable, nash: &NashSolution) -> NashView {
    let gain = match &nash.mixed {
        Some(m) => deviation_gain(table, m.p_shoot, m.q_block),
        None => nash
            .pure
            .iter()
            .map(|&p| profile_gain(table, p))
            .fold(0.0, f64::max),
    };
    NashView {
        pure: nash
            .pure
            .iter()
            .map(|p| strategy_names(p.shooter, p.defender))
            .collect(),
        mixed: nash.mixed.map(|m| MixedView {
            p_shoot: r6(m.p_shoot),
            q_block: r6(m.q_block),
            value: r6(m.value),
        }),
        max_deviation_gain: r6(gain.max(0.0)),
    }
}

/// Attackers ordered by p_on descending; ties keep request order.
fn attackers_view(x: &XosotResult) -> Vec<AttackerView> {
    let mut out: Vec<AttackerView> = x.attackers.iter().map(attacker_view).collect();
    out.sort_by(|a, b| b.p_on.total_cmp(&a.p_on).then(a.player.cmp(&b.player)));
    out
}

/// Evaluate a scene that is already validated.
pub fn evaluate_scene(
    engine: &Engine,
    scene: &Scene,
    remove_closest: bool,
) -> Result<ScenarioResponse, EvalError> {
    let eval = engine.evaluate(scene)?;
    let (shot, pass) = if remove_closest {
        (&eval.shot_without_closest, &eval.pass_without_closest)
    } else {
        (&eval.shot, &eval.pass)
    };
    let curve_scene = if remove_closest {
        scene.without(eval.closest_defender)
    } else {
        scene.clone()
    };
    let curve = engine
        .block_curve(&curve_scene)?
        .into_iter()
        .map(|(t, p)| [r6(t), r6(p)])
        .collect();
    let t = &eval.payoff;
    let payoff_table = PayoffView {
        shoot: PayoffRow {
            blocking: r6(t.shooter[0][0]),
            not_blocking: r6(t.shooter[0][1]),
        },
        pass: PayoffRow {
            blocking: r6(t.shooter[1][0]),
            not_blocking: r6(t.shooter[1][1]),
        },
    };
    Ok(ScenarioResponse {
        schema_version: SCHEMA_VERSION,
        xsot: r6(eval.shot.xsot),
        xosot: r6(eval.pass.value),
        no_teammates: eval.pass.no_teammates,
        best_pass_target: pass.best.map(|k| PassTarget {
            player: pass.attackers[k].player,
            label: pass.attackers[k].label.clone(),
        }),
        closest_defender: eval.closest_defender,
        view: if remove_closest {
            "not_blocking"
        } else {
            "blocking"
        }
        .into(),
        shooter: shooter_view(shot),
        attackers: attackers_view(pass),
        payoff_table,
        nash: nash_view(t, &eval.nash),
        theory_block_curve: curve,
    })
}

/// Validate, apply the options and evaluate.
pub fn evaluate_request(
    engine: &Engine,
    req: &ScenarioRequest,
) -> Result<ScenarioResponse, EvalError> {
    validate(&req.shooter, &req.players, "")?;
    let scene = to_scene(&req.shooter, &req.players);
    match &req.options.theory_params_override {
        Some(p) => {
            check_params(p)?;
            let engine = Engine {
                theory: *p,
                ..engine.clone()
            };
            evaluate_scene(&engine, &scene, req.options.remove_closest)
        }
        None => evaluate_scene(engine, &scene, req.options.remove_closest),
    }
}

fn check_params(p: &TheoryParams) -> Result<(), FieldError> {
    let prefix = "options/theory_params_override";
    let bad = |name: &str, rule: &str| FieldError {
        path: format!("{prefix}/{name}"),
        message: rule.to_string(),
    };
    let ok = |v: f64| v.is_finite();
    if !(ok(p.c1) && p.c1 > 0.0) {
        return Err(bad("c1", "must be positive"));
    }
    if !(ok(p.c2) && p.c2 >= 0.0) {
        return Err(bad("c2", "must be non-negative"));
    }
    if !(ok(p.c3) && p.c3 > 0.0 && p.c3 <= 1.0) {
        return Err(bad("c3", "must lie in (0, 1]"));
    }
    if !(ok(p.c4) && p.c4 > 0.0) {
        return Err(bad("c4", "must be positive"));
    }
    if !(ok(p.a) && p.a < 0.0) {
        return Err(bad("a", "must be negative"));
    }
    Ok(())
}
