//! Reference predictors: constant historical rate and an elastic-net linear
//! probability model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::{FeatureRow, RoleVocab, Standardizer};
use crate::stats::clamp_prob;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("no training rows")]
    Empty,
    #[error("coordinate descent did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("invalid elastic-net settings: {0}")]
    Settings(String),
}

/// Anything that maps a feature row to a probability.
pub trait Predictor {
    fn predict_row(&self, row: &FeatureRow) -> f64;
}

impl Predictor for super::model::ClassifierModel {
    fn predict_row(&self, row: &FeatureRow) -> f64 {
        super::model::ClassifierModel::predict_row(self, row)
    }
}

/// Training positive-class frequency, clamped away from 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Historical {
    pub rate: f64,
}

impl Historical {
    pub fn fit(labels: &[bool]) -> Result<Self, BaselineError> {
        if labels.is_empty() {
            return Err(BaselineError::Empty);
        }
        let pos = labels.iter().filter(|&&y| y).count() as f64;
        Ok(Self {
            rate: clamp_prob(pos / labels.len() as f64),
        })
    }
}

impl Predictor for Historical {
    fn predict_row(&self, _row: &FeatureRow) -> f64 {
        self.rate
    }
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    z.signum() * (z.abs() - gamma).max(0.0)
}

/// One coordinate update: `S(z, lambda) / denom`.
pub fn coordinate_step(z: f64, lambda: f64, denom: f64) -> f64 {
    if denom <= 0.0 {
        0.0
    } else {
        soft_threshold(z, lambda) / denom
    }
}

pub const EN_TOL: f64 = 1e-9;
pub const EN_MAX_SWEEPS: usize = 100_000;

/// Least squares on a dense design, with intercept, minimizing
/// `1/(2n) |y - b - Xw|^2 + strength (l1_ratio |w|_1 + (1 - l1_ratio)/2 |w|^2)`.
/// Returns `(intercept, weights)`.
pub fn elastic_net_fit(
    x: &[Vec<f64>],
    y: &[f64],
    l1_ratio: f64,
    strength: f64,
) -> Result<(f64, Vec<f64>), BaselineError> {
    let n = x.len();
    if n == 0 {
        return Err(BaselineError::Empty);
    }
    if !(0.0..=1.0).contains(&l1_ratio) || strength < 0.0 || strength.is_nan() {
        return Err(BaselineError::Settings(format!(
            "l1_ratio {l1_ratio}, strength {strength}"
        )));
    }
    let d = x[0].len();
    let nf = n as f64;
    let x_mean: Vec<f64> = (0..d)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    // column-major centered design
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| x.iter().map(|r| r[j] - x_mean[j]).collect())
        .collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut w = vec![0.0; d];
    let l1 = nf * strength * l1_ratio;
    let l2 = nf * strength * (1.0 - l1_ratio);
    let mut converged = false;
    for _ in 0..EN_MAX_SWEEPS {
        let mut max_delta: f64 = 0.0;
        let mut max_w: f64 = 0.0;
        for j in 0..d {
            if sq[j] == 0.0 {
                continue;
            }
            let old = w[j];
            let z: f64 = cols[j].iter().zip(&resid).map(|(c, r)| c * r).sum::<f64>() + sq[j] * old;
            let new = coordinate_step(z, l1, sq[j] + l2);
            if new != old {
                let diff = new - old;
                for (r, c) in resid.iter_mut().zip(&cols[j]) {
                    *r -= diff * c;
                }
                w[j] = new;
            }
            max_delta = max_delta.max((new - old).abs());
            max_w = max_w.max(new.abs());
        }
        if max_delta <= EN_TOL * max_w.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(BaselineError::NoConvergence {
            sweeps: EN_MAX_SWEEPS,
        });
    }
    let intercept = y_mean - x_mean.iter().zip(&w).map(|(m, w)| m * w).sum::<f64>();
    Ok((intercept, w))
}

/// Elastic net on standardized numerics plus a one-hot role block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNet {
    pub l1_ratio: f64,
    pub strength: f64,
    pub vocab: RoleVocab,
    pub standardizer: Standardizer,
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl ElasticNet {
    pub const L1_RATIOS: [f64; 3] = [0.1, 0.5, 0.9];
    pub const STRENGTHS: [f64; 3] = [1e-3, 1e-2, 1e-1];

    fn design(vocab: &RoleVocab, std: &Standardizer, row: &FeatureRow) -> Vec<f64> {
        let mut v = std.apply(&row.numeric);
        let mut onehot = vec![0.0; vocab.len()];
        onehot[vocab.index(&row.role)] = 1.0;
        v.extend(onehot);
        v
    }

    pub fn fit(rows: &[FeatureRow], l1_ratio: f64, strength: f64) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::Empty);
        }
        let vocab = RoleVocab::from_rows(rows);
        let standardizer = Standardizer::fit(rows);
        let x: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| Self::design(&vocab, &standardizer, r))
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| if r.label { 1.0 } else { 0.0 })
            .collect();
        let (intercept, weights) = elastic_net_fit(&x, &y, l1_ratio, strength)?;
        Ok(Self {
            l1_ratio,
            strength,
            vocab,
            standardizer,
            intercept,
            weights,
        })
    }

    pub fn raw(&self, row: &FeatureRow) -> f64 {
        let x = Self::design(&self.vocab, &self.standardizer, row);
        self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

impl Predictor for ElasticNet {
    fn predict_row(&self, row: &FeatureRow) -> f64 {
        clamp_prob(self.raw(row))
    }
}
