//! Geometric shot-block model.
//!
//! Defenders inside the feasible block zone are ordered by distance to the
//! shooter. For a shot direction `theta` (degrees from the left-post ray) each
//! defender blocks with a truncated-normal score of the angular offset whose
//! spread grows with distance; defenders act in sequence, so the chance the
//! `d`-th defender blocks is its own score times the chance all nearer ones
//! missed. The shot-level probability averages the per-angle value uniformly
//! over the feasible span with the trapezoid rule and scales it by `c3`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    defender_angle_distance, feasible_angle_span, feasible_zone_contains, GeometryError, PitchPoint,
};
use crate::ingest::{Fold, PlayerSnapshot};
use crate::optim::{Method, ObjectiveSpec, OptimError};
use crate::special::{normal_cdf, normal_pdf};
use crate::stats::{mean_std, neumaier_sum, PROB_EPS};

pub const PARAMS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("invalid block-model parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("fold {fold} needs at least one blocked and one unblocked shot in its training part")]
    DegenerateFold { fold: usize },
    #[error("failed to read or write {path}: {message}")]
    Io { path: String, message: String },
}

/// The five scalars of the block model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Angle scale in degrees.
    pub c1: f64,
    /// Spread growth per meter of defender distance.
    pub c2: f64,
    /// Output scale.
    pub c3: f64,
    /// Spread intercept.
    pub c4: f64,
    /// Lower truncation bound; the upper bound is `-a`.
    pub a: f64,
}

impl Default for TheoryParams {
    /// Reference optimum shipped with the crate.
    fn default() -> Self {
        Self {
            c1: 36.9463,
            c2: 12.3579,
            c3: 0.4998,
            c4: 0.1577,
            a: -2.3098,
        }
    }
}

/// Starting point for fitting.
pub const INITIAL_GUESS: TheoryParams = TheoryParams {
    c1: 30.0,
    c2: 10.0,
    c3: 0.5,
    c4: 0.2,
    a: -2.0,
};

#[derive(Serialize, Deserialize)]
struct VersionedParams {
    #[serde(flatten)]
    params: TheoryParams,
    version: u32,
}

impl TheoryParams {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.c1, self.c2, self.c3, self.c4, self.a]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            c1: v[0],
            c2: v[1],
            c3: v[2],
            c4: v[3],
            a: v[4],
        }
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        let all_finite = self.to_vec().iter().all(|v| v.is_finite());
        let reason = if !all_finite {
            "non-finite value"
        } else if self.c1 <= 0.0 {
            "c1 must be positive"
        } else if self.c2 < 0.0 {
            "c2 must be non-negative"
        } else if !(self.c3 > 0.0 && self.c3 <= 1.0) {
            "c3 must lie in (0, 1]"
        } else if self.c4 <= 0.0 {
            "c4 must be positive"
        } else if self.a >= 0.0 {
            "a must be negative"
        } else {
            return Ok(());
        };
        Err(TheoryError::InvalidParams(format!("{reason}: {self:?}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VersionedParams {
            params: *self,
            version: PARAMS_VERSION,
        })
        .expect("plain struct serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TheoryError> {
        let v: VersionedParams =
            serde_json::from_str(text).map_err(|e| TheoryError::InvalidParams(e.to_string()))?;
        if v.version != PARAMS_VERSION {
            return Err(TheoryError::InvalidParams(format!(
                "unsupported parameter file version {}",
                v.version
            )));
        }
        v.params.validate()?;
        Ok(v.params)
    }

    pub fn load(path: &Path) -> Result<Self, TheoryError> {
        let text = fs::read_to_string(path).map_err(|e| TheoryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), TheoryError> {
        fs::write(path, self.to_json() + "\n").map_err(|e| TheoryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// A defender's position seen from the shooter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefenderAngle {
    /// Degrees from the shooter→left-post ray.
    pub theta_d: f64,
    /// Meters from the shooter.
    pub l_d: f64,
}

/// Opponents (keeper excluded) inside the feasible zone, nearest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilteredDefenders {
    pub defenders: Vec<DefenderAngle>,
}

impl FilteredDefenders {
    pub fn len(&self) -> usize {
        self.defenders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defenders.is_empty()
    }
}

pub fn filter_defenders(shooter: PitchPoint, players: &[PlayerSnapshot]) -> FilteredDefenders {
    let mut defenders: Vec<DefenderAngle> = players
        .iter()
        .filter(|p| !p.teammate && !p.keeper && feasible_zone_contains(shooter, p.location))
        .filter_map(|p| defender_angle_distance(shooter, p.location).ok())
        .map(|(theta_d, l_d)| DefenderAngle { theta_d, l_d })
        .collect();
    defenders.sort_by(|a, b| {
        a.l_d
            .total_cmp(&b.l_d)
            .then(a.theta_d.total_cmp(&b.theta_d))
    });
    FilteredDefenders { defenders }
}

/// Per-defender truncated-normal block score at shot angle `theta`, capped at 1.
pub fn defender_block_density(
    theta: f64,
    theta_d: f64,
    l_d: f64,
    p: &TheoryParams,
) -> Result<f64, TheoryError> {
    let kernel = DefenderKernel::new(l_d, p)?;
    Ok(kernel.eval(theta - theta_d, p))
}

/// Distance-dependent part of the density, shared across angles.
#[derive(Debug, Clone, Copy)]
struct DefenderKernel {
    sigma: f64,
    norm: f64,
}

impl DefenderKernel {
    fn new(l_d: f64, p: &TheoryParams) -> Result<Self, TheoryError> {
        let sigma = p.c4 + l_d * p.c2;
        if !(sigma > 0.0) {
            return Err(TheoryError::InvalidParams(format!(
                "spread c4 + l*c2 = {sigma} is not positive at l = {l_d}"
            )));
        }
        let norm = normal_cdf(-p.a / sigma) - normal_cdf(p.a / sigma);
        Ok(Self { sigma, norm })
    }

    fn eval(&self, offset_deg: f64, p: &TheoryParams) -> f64 {
        let x = offset_deg / p.c1;
        if !(x > p.a && x < -p.a) || self.norm <= 0.0 {
            return 0.0;
        }
        (normal_pdf(x / self.sigma) / (self.sigma * self.norm)).min(1.0)
    }
}

/// Probability that one of the (ordered) defenders blocks a shot at `theta`.
pub fn block_prob_given_angle(
    theta: f64,
    defenders: &FilteredDefenders,
    p: &TheoryParams,
) -> Result<f64, TheoryError> {
    let kernels = defenders
        .defenders
        .iter()
        .map(|d| DefenderKernel::new(d.l_d, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(chain(theta, &defenders.defenders, &kernels, p))
}

fn chain(
    theta: f64,
    defenders: &[DefenderAngle],
    kernels: &[DefenderKernel],
    p: &TheoryParams,
) -> f64 {
    let mut missed = 1.0;
    let mut blocked = 0.0;
    for (d, k) in defenders.iter().zip(kernels) {
        let q = k.eval(theta - d.theta_d, p);
        blocked += missed * q;
        missed *= 1.0 - q;
    }
    blocked
}

/// Integration grid: every whole degree in `[0, n]` plus the endpoint `n`.
pub fn angle_grid(n: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=n.floor() as usize).map(|i| i as f64).collect();
    if n - n.floor() > 1e-12 {
        grid.push(n);
    }
    grid
}

/// Shot geometry resolved once so the model can be re-evaluated cheaply for
/// different parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedShot {
    pub span: f64,
    pub defenders: FilteredDefenders,
}

impl PreparedShot {
    pub fn new(shooter: PitchPoint, players: &[PlayerSnapshot]) -> Result<Self, TheoryError> {
        let span = feasible_angle_span(shooter)?.n;
        Ok(Self {
            span,
            defenders: filter_defenders(shooter, players),
        })
    }

    /// Shot with no 360 coverage: behaves like an empty defender set.
    pub fn uncovered(shooter: PitchPoint) -> Result<Self, TheoryError> {
        Self::new(shooter, &[])
    }

    /// Geometry for a shot, with an empty span (probability 0) on the goal
    /// line where the angle span is undefined. `None` players means no 360
    /// coverage.
    pub fn or_empty(shooter: PitchPoint, players: Option<&[PlayerSnapshot]>) -> Self {
        Self::new(shooter, players.unwrap_or(&[])).unwrap_or(Self {
            span: 0.0,
            defenders: FilteredDefenders::default(),
        })
    }

    pub fn probability(&self, p: &TheoryParams) -> Result<f64, TheoryError> {
        if self.defenders.is_empty() || self.span <= 0.0 {
            return Ok(0.0);
        }
        let kernels = self
            .defenders
            .defenders
            .iter()
            .map(|d| DefenderKernel::new(d.l_d, p))
            .collect::<Result<Vec<_>, _>>()?;
        let grid = angle_grid(self.span);
        let values: Vec<f64> = grid
            .iter()
            .map(|&t| chain(t, &self.defenders.defenders, &kernels, p))
            .collect();
        let integral: f64 = grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum();
        Ok(p.c3 / self.span * integral)
    }

    /// `(theta, P(block | theta))` on the integration grid.
    pub fn curve(&self, p: &TheoryParams) -> Result<Vec<(f64, f64)>, TheoryError> {
        let grid = angle_grid(self.span);
        grid.into_iter()
            .map(|t| Ok((t, block_prob_given_angle(t, &self.defenders, p)?)))
            .collect()
    }
}

/// Block probability for a shooter facing the given frame players.
pub fn shot_block_probability(
    shooter: PitchPoint,
    players: &[PlayerSnapshot],
    p: &TheoryParams,
) -> Result<f64, TheoryError> {
    PreparedShot::new(shooter, players)?.probability(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockExample {
    pub shot: PreparedShot,
    pub blocked: bool,
}

/// Mean binary cross-entropy of the model against the block labels.
pub fn block_cel(examples: &[BlockExample], p: &TheoryParams) -> Result<f64, TheoryError> {
    p.validate()?;
    let losses = examples
        .par_iter()
        .map(|ex| {
            let prob = ex.shot.probability(p)?.clamp(PROB_EPS, 1.0 - PROB_EPS);
            Ok(if ex.blocked {
                -prob.ln()
            } else {
                -(1.0 - prob).ln()
            })
        })
        .collect::<Result<Vec<f64>, TheoryError>>()?;
    Ok(neumaier_sum(&losses) / examples.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub initial: TheoryParams,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            method: Method::Powell,
            tol: 1e-8,
            max_iter: 200,
            initial: INITIAL_GUESS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFit {
    pub params: TheoryParams,
    pub train_cel: f64,
    pub valid_cel: f64,
    pub n_evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryFit {
    pub method: Method,
    /// Refit on every training example.
    pub params: TheoryParams,
    pub train_cel: f64,
    pub folds: Vec<FoldFit>,
    pub cv_mean: f64,
    pub cv_std: f64,
}

impl TheoryFit {
    pub fn cv_cel(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.valid_cel).collect()
    }
}

/// Search box for (c1, c2, c3, c4, a). Wide enough to never bind on sensible
/// data; it stops flat directions (c1 to infinity) from wandering off.
pub const PARAM_BOUNDS: [(f64, f64); 5] = [
    (1e-3, 1e4),
    (0.0, 1e4),
    (1e-6, 1.0),
    (1e-6, 1e4),
    (-1e3, -1e-6),
];

/// Minimize the block CEL over `examples`.
pub fn fit_params(
    examples: &[BlockExample],
    settings: &FitSettings,
) -> Result<(TheoryParams, f64, usize, bool), TheoryError> {
    let obj = ObjectiveSpec::new(5, |x: &[f64]| {
        block_cel(examples, &TheoryParams::from_slice(x)).unwrap_or(f64::INFINITY)
    })
    .with_bounds(PARAM_BOUNDS.to_vec());
    let res = settings.method.minimize(
        &obj,
        &settings.initial.to_vec(),
        settings.tol,
        settings.max_iter,
    )?;
    Ok((
        TheoryParams::from_slice(&res.x_star),
        res.f_star,
        res.n_evals,
        res.converged,
    ))
}

/// Fit per fold (reporting validation CEL) and once on all of `examples`.
/// Fold indices address `examples`.
pub fn fit_theory_params(
    examples: &[BlockExample],
    folds: &[Fold],
    settings: &FitSettings,
) -> Result<TheoryFit, TheoryError> {
    let pick = |idx: &[usize]| idx.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
    let mut fold_fits = Vec::with_capacity(folds.len());
    for (k, fold) in folds.iter().enumerate() {
        let train = pick(&fold.train);
        let valid = pick(&fold.valid);
        if !train.iter().any(|e| e.blocked) || train.iter().all(|e| e.blocked) {
            return Err(TheoryError::DegenerateFold { fold: k });
        }
        let (params, train_cel, n_evals, converged) = fit_params(&train, settings)?;
        let valid_cel = block_cel(&valid, &params)?;
        fold_fits.push(FoldFit {
            params,
            train_cel,
            valid_cel,
            n_evals,
            converged,
        });
    }
    let (params, train_cel, _, _) = fit_params(examples, settings)?;
    let (cv_mean, cv_std) = mean_std(&fold_fits.iter().map(|f| f.valid_cel).collect::<Vec<_>>());
    Ok(TheoryFit {
        method: settings.method,
        params,
        train_cel,
        folds: fold_fits,
        cv_mean,
        cv_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn snap(x: f64, y: f64, teammate: bool, keeper: bool) -> PlayerSnapshot {
        PlayerSnapshot {
            location: PitchPoint::new(x, y),
            teammate,
            actor: false,
            keeper,
        }
    }

    #[test]
    fn goal_line_shot_has_no_block_chance() {
        let players = [snap(110.0, 40.0, false, false)];
        let shot = PreparedShot::or_empty(PitchPoint::new(120.0, 40.0), Some(&players));
        assert_eq!(shot.span, 0.0);
        assert_eq!(shot.probability(&TheoryParams::default()).unwrap(), 0.0);
        let normal = PreparedShot::or_empty(PitchPoint::new(100.0, 40.0), Some(&players));
        assert_eq!(
            normal,
            PreparedShot::new(PitchPoint::new(100.0, 40.0), &players).unwrap()
        );
    }

    #[test]
    fn density_examples() {
        // sigma = c4 + l*c2 = 1 with c2 = 0, c4 = 1
        let p = TheoryParams {
            c1: 10.0,
            c2: 0.0,
            c3: 1.0,
            c4: 1.0,
            a: -2.3098,
        };
        let want = (1.0 / (2.0 * std::f64::consts::PI).sqrt())
            / (libm::erf(2.3098 / std::f64::consts::SQRT_2));
        let got = defender_block_density(12.0, 12.0, 3.0, &p).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.4075, epsilon = 1e-4);
        let up = defender_block_density(12.0 + 7.5, 12.0, 3.0, &p).unwrap();
        let down = defender_block_density(12.0 - 7.5, 12.0, 3.0, &p).unwrap();
        assert_abs_diff_eq!(up, down, epsilon = 1e-15);
        // x = 24 / 10 = 2.4 lies outside (a, -a)
        assert_eq!(defender_block_density(36.0, 12.0, 3.0, &p).unwrap(), 0.0);
        let bad = TheoryParams { c4: -1.0, ..p };
        assert!(defender_block_density(0.0, 0.0, 0.0, &bad).is_err());
    }

    #[test]
    fn density_is_capped_at_one() {
        let p = TheoryParams {
            c1: 1.0,
            c2: 0.0,
            c3: 1.0,
            c4: 0.01,
            a: -3.0,
        };
        assert_eq!(defender_block_density(0.0, 0.0, 1.0, &p).unwrap(), 1.0);
    }

    #[test]
    fn chain_examples() {
        let p = TheoryParams::default();
        assert_eq!(
            block_prob_given_angle(3.0, &FilteredDefenders::default(), &p).unwrap(),
            0.0
        );
        let one = FilteredDefenders {
            defenders: vec![DefenderAngle {
                theta_d: 5.0,
                l_d: 4.0,
            }],
        };
        let q = defender_block_density(3.0, 5.0, 4.0, &p).unwrap();
        assert_eq!(block_prob_given_angle(3.0, &one, &p).unwrap(), q);
    }

    #[test]
    fn two_defenders_with_half_probability() {
        // c1 huge makes x ~ 0 for any offset; choose sigma so the density is 0.5.
        // At x = 0 the density is phi(0) / (sigma * (2 Phi(-a/sigma) - 1)).
        // With a = -1 and sigma -> large this tends to 1 / (2 * 1) = 0.5.
        let p = TheoryParams {
            c1: 1e12,
            c2: 0.0,
            c3: 1.0,
            c4: 1e6,
            a: -1.0,
        };
        let d = FilteredDefenders {
            defenders: vec![
                DefenderAngle {
                    theta_d: 0.0,
                    l_d: 1.0,
                },
                DefenderAngle {
                    theta_d: 0.0,
                    l_d: 2.0,
                },
            ],
        };
        let q = defender_block_density(0.0, 0.0, 1.0, &p).unwrap();
        assert_abs_diff_eq!(q, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(
            block_prob_given_angle(0.0, &d, &p).unwrap(),
            0.75,
            epsilon = 1e-9
        );
    }

    #[test]
    fn filter_examples() {
        let shooter = PitchPoint::new(105.0, 40.0);
        let only_mates = [
            snap(110.0, 40.0, true, false),
            snap(112.0, 38.0, true, false),
        ];
        assert!(filter_defenders(shooter, &only_mates).is_empty());
        let behind = [snap(95.0, 40.0, false, false)];
        assert!(filter_defenders(shooter, &behind).is_empty());
        let keeper = [snap(119.0, 40.0, false, true)];
        assert!(filter_defenders(shooter, &keeper).is_empty());
        let two = [
            snap(115.0, 41.0, false, false),
            snap(108.0, 39.0, false, false),
        ];
        let f = filter_defenders(shooter, &two);
        assert_eq!(f.len(), 2);
        assert!(f.defenders[0].l_d < f.defenders[1].l_d);
    }

    #[test]
    fn no_defenders_means_zero() {
        let shooter = PitchPoint::new(100.0, 30.0);
        let p = TheoryParams::default();
        assert_eq!(shot_block_probability(shooter, &[], &p).unwrap(), 0.0);
        assert_eq!(
            PreparedShot::uncovered(shooter)
                .unwrap()
                .probability(&p)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn uniform_integrand_gives_c3_times_q() {
        // c1 huge: every angle sees x ~ 0, so q(theta) is constant over the span.
        let p = TheoryParams {
            c1: 1e9,
            c2: 0.5,
            c3: 0.8,
            c4: 0.3,
            a: -2.0,
        };
        let shooter = PitchPoint::new(104.0, 35.0);
        let players = [snap(110.0, 38.0, false, false)];
        let shot = PreparedShot::new(shooter, &players).unwrap();
        let d = shot.defenders.defenders[0];
        let q = defender_block_density(0.0, d.theta_d, d.l_d, &p).unwrap();
        assert_abs_diff_eq!(shot.probability(&p).unwrap(), 0.8 * q, epsilon = 1e-9);
    }

    #[test]
    fn grid_has_integer_steps_and_endpoint() {
        assert_eq!(angle_grid(3.5), vec![0.0, 1.0, 2.0, 3.0, 3.5]);
        assert_eq!(angle_grid(2.0), vec![0.0, 1.0, 2.0]);
        assert_eq!(angle_grid(0.4), vec![0.0, 0.4]);
    }

    #[test]
    fn params_json_round_trip_and_version() {
        let p = TheoryParams::default();
        let text = p.to_json();
        assert!(text.contains("\"version\": 1"));
        assert_eq!(TheoryParams::from_json(&text).unwrap(), p);
        let bad = text.replace("\"version\": 1", "\"version\": 2");
        assert!(TheoryParams::from_json(&bad).is_err());
    }

    fn random_players(seed: u64, n: usize) -> (PitchPoint, Vec<PlayerSnapshot>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let shooter = PitchPoint::new(rng.random_range(85.0..117.0), rng.random_range(15.0..65.0));
        let players = (0..n)
            .map(|_| {
                snap(
                    rng.random_range(shooter.x..120.0),
                    rng.random_range(15.0..65.0),
                    rng.random_bool(0.2),
                    false,
                )
            })
            .collect();
        (shooter, players)
    }

    fn random_params(seed: u64) -> TheoryParams {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        TheoryParams {
            c1: rng.random_range(0.5..60.0),
            c2: rng.random_range(0.0..15.0),
            c3: rng.random_range(0.05..1.0),
            c4: rng.random_range(0.05..3.0),
            a: rng.random_range(-4.0..-0.2),
        }
    }

    #[test]
    fn bounds_and_append_monotonicity_on_random_frames() {
        for seed in 0..1000u64 {
            let (shooter, players) = random_players(seed, 1 + (seed % 8) as usize);
            let p = if seed % 2 == 0 {
                TheoryParams::default()
            } else {
                random_params(seed)
            };
            let shot = PreparedShot::new(shooter, &players).unwrap();
            let prob = shot.probability(&p).unwrap();
            assert!((0.0..=p.c3 + 1e-12).contains(&prob), "seed {seed}: {prob}");
            // appending a farther defender never lowers P(block | theta)
            let mut more = shot.defenders.clone();
            let far = more.defenders.last().map_or(1.0, |d| d.l_d + 0.5);
            more.defenders.push(DefenderAngle {
                theta_d: (seed % 40) as f64 - 5.0,
                l_d: far,
            });
            for t in angle_grid(shot.span) {
                let before = block_prob_given_angle(t, &shot.defenders, &p).unwrap();
                let after = block_prob_given_angle(t, &more, &p).unwrap();
                assert!(after >= before - 1e-15, "seed {seed} theta {t}");
            }
        }
    }

    /// 1e-3 for smooth integrands. A truncation edge inside the span puts a
    /// jump of at most 1 in the chain value; a 1-degree trapezoid misplaces
    /// at most half a step of it, so each edge adds up to c3 * 0.5 / n.
    fn tolerance(shot: &PreparedShot, p: &TheoryParams) -> f64 {
        let reach = -p.a * p.c1;
        let edges = shot
            .defenders
            .defenders
            .iter()
            .flat_map(|d| [d.theta_d - reach, d.theta_d + reach])
            .filter(|e| *e > 0.0 && *e < shot.span)
            .count();
        1e-3 + edges as f64 * p.c3 * 0.5 / shot.span
    }

    #[test]
    fn smooth_frames_meet_the_tight_bound() {
        let p = TheoryParams::default();
        let mut checked = 0;
        for seed in 0..400u64 {
            let (shooter, players) = random_players(seed, 6);
            let shot = PreparedShot::new(shooter, &players).unwrap();
            if tolerance(&shot, &p) > 1e-3 {
                continue;
            }
            checked += 1;
            let got = shot.probability(&p).unwrap();
            assert!(
                (got - riemann_oracle(&shot, &p, 0.01)).abs() < 1e-3,
                "seed {seed}"
            );
        }
        assert!(checked > 300);
    }

    fn riemann_oracle(shot: &PreparedShot, p: &TheoryParams, step: f64) -> f64 {
        let n = shot.span;
        let m = (n / step).ceil() as usize;
        let h = n / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let t = (i as f64 + 0.5) * h;
            let mut missed = 1.0;
            let mut blocked = 0.0;
            for d in &shot.defenders.defenders {
                let q = defender_block_density(t, d.theta_d, d.l_d, p).unwrap();
                blocked += missed * q;
                missed *= 1.0 - q;
            }
            acc += blocked * h;
        }
        p.c3 / n * acc
    }

    #[test]
    fn trapezoid_matches_fine_grid_with_reference_params() {
        let p = TheoryParams::default();
        for seed in 0..200u64 {
            let (shooter, players) = random_players(seed, 6);
            let shot = PreparedShot::new(shooter, &players).unwrap();
            let got = shot.probability(&p).unwrap();
            let want = riemann_oracle(&shot, &p, 0.01);
            assert!(
                (got - want).abs() < tolerance(&shot, &p),
                "seed {seed}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn trapezoid_halving_is_stable() {
        let p = TheoryParams::default();
        for seed in 0..200u64 {
            let (shooter, players) = random_players(seed, 5);
            let shot = PreparedShot::new(shooter, &players).unwrap();
            let coarse = shot.probability(&p).unwrap();
            // half-degree trapezoid
            let n = shot.span;
            let m = (2.0 * n).floor() as usize;
            let mut grid: Vec<f64> = (0..=m).map(|i| i as f64 * 0.5).collect();
            if n - grid[m] > 1e-12 {
                grid.push(n);
            }
            let vals: Vec<f64> = grid
                .iter()
                .map(|&t| block_prob_given_angle(t, &shot.defenders, &p).unwrap())
                .collect();
            let fine: f64 = grid
                .windows(2)
                .zip(vals.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
                .sum::<f64>()
                * p.c3
                / n;
            assert!(
                (coarse - fine).abs() < tolerance(&shot, &p),
                "seed {seed}: {coarse} vs {fine}"
            );
        }
    }

    proptest! {
        #[test]
        fn density_translation_invariant(theta in -40.0f64..80.0, theta_d in -40.0f64..80.0,
                                         shift in -100.0f64..100.0, l in 0.1f64..30.0) {
            let p = TheoryParams::default();
            let a = defender_block_density(theta, theta_d, l, &p).unwrap();
            let b = defender_block_density(theta + shift, theta_d + shift, l, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn equal_defenders_commute(theta in 0.0f64..30.0, td in 0.0f64..30.0, l1 in 0.5f64..20.0) {
            let p = TheoryParams::default();
            // same (theta_d, l_d) -> identical q; order cannot matter
            let d = DefenderAngle { theta_d: td, l_d: l1 };
            let e = DefenderAngle { theta_d: td, l_d: l1 };
            let ab = FilteredDefenders { defenders: vec![d, e] };
            let ba = FilteredDefenders { defenders: vec![e, d] };
            prop_assert_eq!(block_prob_given_angle(theta, &ab, &p).unwrap(),
                            block_prob_given_angle(theta, &ba, &p).unwrap());
        }
    }
}
