//! The shooter versus closest-defender 2x2 zero-sum game.

use serde::{Deserialize, Serialize};

pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShooterStrategy {
    Shoot,
    Pass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DefenderStrategy {
    Blocking,
    NotBlocking,
}

impl ShooterStrategy {
    pub const ALL: [ShooterStrategy; 2] = [ShooterStrategy::Shoot, ShooterStrategy::Pass];
    fn row(self) -> usize {
        self as usize
    }
}

impl DefenderStrategy {
    pub const ALL: [DefenderStrategy; 2] =
        [DefenderStrategy::Blocking, DefenderStrategy::NotBlocking];
    fn col(self) -> usize {
        self as usize
    }
}

/// Shooter payoffs; rows Shoot/Pass, columns Blocking/NotBlocking. The
/// defender receives the negation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    pub shooter: [[f64; 2]; 2],
}

impl PayoffTable {
    pub fn new(shoot_block: f64, shoot_no_block: f64, pass_block: f64, pass_no_block: f64) -> Self {
        Self {
            shooter: [[shoot_block, shoot_no_block], [pass_block, pass_no_block]],
        }
    }

    pub fn get(&self, s: ShooterStrategy, d: DefenderStrategy) -> f64 {
        self.shooter[s.row()][d.col()]
    }

    pub fn defender(&self) -> [[f64; 2]; 2] {
        let m = self.shooter;
        [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]]
    }

    /// Entry-wise mean; the aggregate game averages payoffs before solving.
    pub fn mean(tables: &[PayoffTable]) -> Option<PayoffTable> {
        if tables.is_empty() {
            return None;
        }
        let n = tables.len() as f64;
        let mut m = [[0.0; 2]; 2];
        for t in tables {
            for (r, row) in t.shooter.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    m[r][c] += v;
                }
            }
        }
        m.iter_mut().flatten().for_each(|v| *v /= n);
        Some(PayoffTable { shooter: m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub shooter: ShooterStrategy,
    pub defender: DefenderStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedSolution {
    /// Probability the shooter shoots.
    pub p_shoot: f64,
    /// Probability the defender blocks.
    pub q_block: f64,
    /// Shooter's expected payoff; the defender's is its negation.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashSolution {
    pub pure: Vec<Profile>,
    pub mixed: Option<MixedSolution>,
}

/// Profiles where each side is best-responding, ties within [`TIE_TOL`].
pub fn pure_nash(t: &PayoffTable) -> Vec<Profile> {
    let m = t.shooter;
    let mut out = Vec::new();
    for s in ShooterStrategy::ALL {
        for d in DefenderStrategy::ALL {
            let v = m[s.row()][d.col()];
            let shooter_ok = (0..2).all(|r| v >= m[r][d.col()] - TIE_TOL);
            let defender_ok = (0..2).all(|c| v <= m[s.row()][c] + TIE_TOL);
            if shooter_ok && defender_ok {
                out.push(Profile {
                    shooter: s,
                    defender: d,
                });
            }
        }
    }
    out
}

/// Closed-form mixed equilibrium; collapses to the first pure equilibrium
/// when one exists.
pub fn mixed_nash_2x2(t: &PayoffTable) -> MixedSolution {
    if let Some(p) = pure_nash(t).first() {
        return MixedSolution {
            p_shoot: if p.shooter == ShooterStrategy::Shoot {
                1.0
            } else {
                0.0
            },
            q_block: if p.defender == DefenderStrategy::Blocking {
                1.0
            } else {
                0.0
            },
            value: t.get(p.shooter, p.defender),
        };
    }
    let [[a, b], [c, d]] = t.shooter;
    let denom = a - b - c + d;
    assert!(
        denom.abs() > 0.0,
        "a 2x2 zero-sum game without a pure equilibrium has a non-zero denominator"
    );
    MixedSolution {
        p_shoot: ((d - c) / denom).clamp(0.0, 1.0),
        q_block: ((d - b) / denom).clamp(0.0, 1.0),
        value: (a * d - b * c) / denom,
    }
}

pub fn solve(t: &PayoffTable) -> NashSolution {
    let pure = pure_nash(t);
    let mixed = if pure.is_empty() {
        Some(mixed_nash_2x2(t))
    } else {
        None
    };
    NashSolution { pure, mixed }
}

/// Largest gain any player gets by a unilateral pure deviation from the
/// mixed profile `(p_shoot, q_block)`.
pub fn deviation_gain(t: &PayoffTable, p_shoot: f64, q_block: f64) -> f64 {
    let m = t.shooter;
    let p = [p_shoot, 1.0 - p_shoot];
    let q = [q_block, 1.0 - q_block];
    let value: f64 = (0..2)
        .map(|r| (0..2).map(|c| p[r] * q[c] * m[r][c]).sum::<f64>())
        .sum();
    let best_row = (0..2)
        .map(|r| q[0] * m[r][0] + q[1] * m[r][1])
        .fold(f64::NEG_INFINITY, f64::max);
    let best_col = (0..2)
        .map(|c| p[0] * m[0][c] + p[1] * m[1][c])
        .fold(f64::INFINITY, f64::min);
    (best_row - value).max(value - best_col)
}

pub fn profile_gain(t: &PayoffTable, p: Profile) -> f64 {
    let ps = if p.shooter == ShooterStrategy::Shoot {
        1.0
    } else {
        0.0
    };
    let qb = if p.defender == DefenderStrategy::Blocking {
        1.0
    } else {
        0.0
    };
    deviation_gain(t, ps, qb)
}
