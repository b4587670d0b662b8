//! Potential pitch control for a pass target, integrated up to the ball's
//! arrival time. Players are stationary (freeze frames carry no velocity), so
//! the expected interception time is reaction time plus straight-line run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PitchPoint;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("time step must be positive, got {0}")]
    Step(f64),
    #[error("horizon must be non-negative and finite, got {0}")]
    Horizon(f64),
    #[error("invalid control parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Left-point Euler step of the coupled system.
    Euler,
    /// The uncontrolled mass `1 - sum P` decays as `exp(-int F)`, with
    /// `F = sum lambda f_j`; each step removes that mass exactly and shares it
    /// out in proportion to each player's Simpson-integrated rate.
    #[default]
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    pub reaction_time: f64,
    pub max_speed: f64,
    pub ball_speed: f64,
    pub lambda: f64,
    pub s: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
}

fn default_dt() -> f64 {
    0.04
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            reaction_time: 0.7,
            max_speed: 5.0,
            ball_speed: 15.0,
            lambda: 4.3,
            s: 0.45,
            dt: default_dt(),
            integrator: Integrator::default(),
        }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        let fields = [
            ("reaction_time", self.reaction_time),
            ("max_speed", self.max_speed),
            ("ball_speed", self.ball_speed),
            ("lambda", self.lambda),
            ("s", self.s),
            ("dt", self.dt),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::Params(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Competitor {
    pub location: PitchPoint,
    pub teammate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlResult {
    /// Aligned with the competitor slice.
    pub per_player: Vec<f64>,
    pub t: f64,
}

impl ControlResult {
    pub fn total(&self) -> f64 {
        self.per_player.iter().sum()
    }
}

pub fn interception_time(player: PitchPoint, target: PitchPoint, p: &ControlParams) -> f64 {
    p.reaction_time + player.metric_distance(target) / p.max_speed
}

pub fn ball_travel_time(from: PitchPoint, to: PitchPoint, p: &ControlParams) -> f64 {
    from.metric_distance(to) / p.ball_speed
}

/// Probability density of having arrived by `t` for interception time `tau`.
fn arrival(t: f64, tau: f64, s: f64) -> f64 {
    let k = 3f64.sqrt() * s / std::f64::consts::PI;
    let u = (t - tau) / k;
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Closed form for one player alone: `1 - exp(-lambda * int_0^T f)`.
pub fn single_player_closed_form(t: f64, tau: f64, p: &ControlParams) -> f64 {
    let k = 3f64.sqrt() * p.s / std::f64::consts::PI;
    // int logistic = k ln(1 + e^{(t - tau)/k}), written with ln_1p for range
    let softplus = |x: f64| {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    let integral = k * (softplus((t - tau) / k) - softplus(-tau / k));
    1.0 - (-p.lambda * integral).exp()
}

/// Control probability of every competitor for a ball arriving at `target`
/// after `t` seconds, with time step `dt`.
pub fn ppcf_at(
    target: PitchPoint,
    players: &[Competitor],
    t: f64,
    p: &ControlParams,
    dt: f64,
) -> Result<ControlResult, ControlError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(ControlError::Step(dt));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(ControlError::Horizon(t));
    }
    p.validate()?;
    let taus: Vec<f64> = players
        .iter()
        .map(|c| interception_time(c.location, target, p))
        .collect();
    let mut probs = vec![0.0; players.len()];
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    let mut now = 0.0;
    let mut free = 1.0;
    for step in 0..steps {
        let h = if step + 1 == steps { t - now } else { dt };
        if h <= 0.0 {
            break;
        }
        match p.integrator {
            Integrator::Euler => {
                let rates: Vec<f64> = taus
                    .iter()
                    .map(|&tau| p.lambda * arrival(now, tau, p.s))
                    .collect();
                let total: f64 = rates.iter().sum::<f64>() * h;
                // a step can never hand out more than the uncontrolled mass
                let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
                for (pj, r) in probs.iter_mut().zip(&rates) {
                    *pj += free * r * h * scale;
                }
            }
            Integrator::Exponential => {
                let rates: Vec<f64> = taus
                    .iter()
                    .map(|&tau| {
                        let a = arrival(now, tau, p.s);
                        let m = arrival(now + 0.5 * h, tau, p.s);
                        let b = arrival(now + h, tau, p.s);
                        p.lambda * h * (a + 4.0 * m + b) / 6.0
                    })
                    .collect();
                let total: f64 = rates.iter().sum();
                if total > 0.0 {
                    let taken = free * -(-total).exp_m1();
                    for (pj, r) in probs.iter_mut().zip(&rates) {
                        *pj += taken * r / total;
                    }
                }
            }
        }
        free = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        now += h;
    }
    Ok(ControlResult {
        per_player: probs,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn comp(x: f64, y: f64, teammate: bool) -> Competitor {
        Competitor {
            location: PitchPoint::new(x, y),
            teammate,
        }
    }

    #[test]
    fn interception_and_travel_examples() {
        let p = ControlParams::default();
        let a = PitchPoint::new(100.0, 40.0);
        assert_eq!(interception_time(a, a, &p), 0.7);
        // 10 m along x is 120/105 * 10 yards
        let b = PitchPoint::new(100.0 + 10.0 * 120.0 / 105.0, 40.0);
        assert!((interception_time(a, b, &p) - 2.7).abs() < 1e-12);
        let c = PitchPoint::new(100.0 + 3.5 * 120.0 / 105.0, 40.0);
        assert!((interception_time(a, c, &p) - 1.4).abs() < 1e-12);
        assert_eq!(ball_travel_time(a, a, &p), 0.0);
        let d15 = PitchPoint::new(100.0 + 15.0 * 120.0 / 105.0, 40.0);
        let d30 = PitchPoint::new(100.0 + 30.0 * 120.0 / 105.0, 40.0);
        assert!((ball_travel_time(a, d15, &p) - 1.0).abs() < 1e-12);
        assert!((ball_travel_time(a, d30, &p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_horizon_and_bad_step() {
        let p = ControlParams::default();
        let t = PitchPoint::new(100.0, 40.0);
        let r = ppcf_at(t, &[comp(100.0, 40.0, true)], 0.0, &p, 0.04).unwrap();
        assert_eq!(r.per_player, vec![0.0]);
        assert_eq!(ppcf_at(t, &[], 1.0, &p, 0.0), Err(ControlError::Step(0.0)));
    }

    #[test]
    fn single_player_matches_closed_form() {
        for integrator in [Integrator::Exponential, Integrator::Euler] {
            let p = ControlParams {
                integrator,
                ..ControlParams::default()
            };
            let target = PitchPoint::new(100.0, 40.0);
            let player = comp(104.0, 43.0, true);
            let tau = interception_time(player.location, target, &p);
            let horizon = tau + 10.0 * p.s;
            let r = ppcf_at(target, &[player], horizon, &p, p.dt).unwrap();
            assert!((r.per_player[0] - 1.0).abs() < 1e-3, "{integrator:?}");
        }
        let p = ControlParams::default();
        let target = PitchPoint::new(100.0, 40.0);
        for (dx, horizon) in [(0.0, 0.5), (3.0, 1.0), (8.0, 2.3), (12.0, 3.7)] {
            let player = comp(100.0 + dx, 40.0, false);
            let tau = interception_time(player.location, target, &p);
            let r = ppcf_at(target, &[player], horizon, &p, p.dt).unwrap();
            let want = single_player_closed_form(horizon, tau, &p);
            assert!((r.per_player[0] - want).abs() < 1e-3, "{dx} {horizon}");
        }
    }

    #[test]
    fn symmetric_players_split_evenly() {
        let p = ControlParams::default();
        let target = PitchPoint::new(100.0, 40.0);
        let r = ppcf_at(
            target,
            &[comp(100.0, 35.0, true), comp(100.0, 45.0, false)],
            2.0,
            &p,
            0.04,
        )
        .unwrap();
        assert_eq!(r.per_player[0], r.per_player[1]);
    }

    fn random_scene(seed: u64) -> (PitchPoint, Vec<Competitor>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = PitchPoint::new(rng.random_range(80.0..118.0), rng.random_range(10.0..70.0));
        let n = rng.random_range(1..=22);
        let players = (0..n)
            .map(|_| {
                comp(
                    (target.x + rng.random_range(-15.0..15.0)).clamp(0.0, 120.0),
                    (target.y + rng.random_range(-15.0..15.0)).clamp(0.0, 80.0),
                    rng.random_bool(0.5),
                )
            })
            .collect();
        (target, players)
    }

    #[test]
    fn sum_bounded_monotone_and_step_stable() {
        let p = ControlParams::default();
        for seed in 0..200 {
            let (target, players) = random_scene(seed);
            let mut prev = vec![0.0; players.len()];
            for k in 1..=12 {
                let horizon = 0.35 * k as f64;
                let r = ppcf_at(target, &players, horizon, &p, p.dt).unwrap();
                assert!(r.total() <= 1.0 + 1e-12, "seed {seed}");
                for (a, b) in r.per_player.iter().zip(&prev) {
                    assert!(*a >= *b - 1e-12, "seed {seed}");
                }
                let half = ppcf_at(target, &players, horizon, &p, p.dt / 2.0).unwrap();
                for (a, b) in r.per_player.iter().zip(&half.per_player) {
                    assert!((a - b).abs() < 1e-3, "seed {seed}");
                }
                prev = r.per_player;
            }
        }
    }

    #[test]
    fn moving_closer_never_hurts() {
        let p = ControlParams::default();
        let target = PitchPoint::new(100.0, 40.0);
        let others = [comp(103.0, 42.0, false), comp(97.0, 36.0, true)];
        let mut last = 0.0;
        for dx in [20.0, 15.0, 10.0, 5.0, 2.0, 0.0] {
            let mut players = vec![comp(100.0 + dx, 40.0, true)];
            players.extend_from_slice(&others);
            let r = ppcf_at(target, &players, 2.0, &p, p.dt).unwrap();
            assert!(r.per_player[0] >= last);
            last = r.per_player[0];
        }
    }

    #[test]
    fn euler_step_halving_exceeds_guard() {
        // The literal left-point Euler scheme is O(dt): at dt = 0.04 it moves
        // by more than 1e-3 when dt is halved, which is why it is not the
        // default.
        let p = ControlParams {
            integrator: Integrator::Euler,
            ..ControlParams::default()
        };
        let target = PitchPoint::new(100.0, 40.0);
        let players = [comp(104.0, 40.0, true)];
        let a = ppcf_at(target, &players, 1.5, &p, 0.04).unwrap().per_player[0];
        let b = ppcf_at(target, &players, 1.5, &p, 0.02).unwrap().per_player[0];
        assert!((a - b).abs() > 1e-3);
    }
}
