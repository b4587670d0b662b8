//! Cross-validation and grid search over the outcome classifiers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{BaselineError, ElasticNet, Historical, Predictor};
use super::features::{FeatureKind, FeatureRow};
use super::mlp::{Activation, MlpError};
use super::model::ClassifierModel;
use super::train::{inverse_class_weights, train_mlp, weighted_cel, TrainConfig};
use crate::ingest::Fold;
use crate::stats::{bce, mean_std};

/// SplitMix64 over `base` and `parts`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    /// Weighted CEL with the fold-train class weights (model selection).
    pub weighted_cel: f64,
    /// Plain CEL (reported).
    pub cel: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub name: String,
    pub folds: Vec<FoldScore>,
    pub mean_weighted: f64,
    pub std_weighted: f64,
    pub mean_cel: f64,
    pub std_cel: f64,
}

impl CvReport {
    pub fn from_folds(name: String, folds: Vec<FoldScore>) -> Self {
        let (mean_weighted, std_weighted) =
            mean_std(&folds.iter().map(|f| f.weighted_cel).collect::<Vec<_>>());
        let (mean_cel, std_cel) = mean_std(&folds.iter().map(|f| f.cel).collect::<Vec<_>>());
        Self {
            name,
            folds,
            mean_weighted,
            std_weighted,
            mean_cel,
            std_cel,
        }
    }
}

fn pick(rows: &[FeatureRow], idx: &[usize]) -> Vec<FeatureRow> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

fn score<P: Predictor>(
    model: &P,
    train: &[FeatureRow],
    valid: &[FeatureRow],
    best_epoch: usize,
) -> FoldScore {
    let weights = inverse_class_weights(&train.iter().map(|r| r.label).collect::<Vec<_>>());
    let probs: Vec<f64> = valid.iter().map(|r| model.predict_row(r)).collect();
    let labels: Vec<bool> = valid.iter().map(|r| r.label).collect();
    FoldScore {
        weighted_cel: weighted_cel(&probs, &labels, weights),
        cel: bce(&probs, &labels),
        best_epoch,
    }
}

/// Train on each fold's training part with checkpointing on its validation
/// part. `rows` is indexed by the fold indices.
pub fn cross_validate(
    kind: FeatureKind,
    rows: &[FeatureRow],
    folds: &[Fold],
    cfg: &TrainConfig,
) -> Result<CvReport, MlpError> {
    let scores = (0..folds.len())
        .map(|k| cv_fold(kind, rows, folds, cfg, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvReport::from_folds(cfg.label(), scores))
}

fn cv_fold(
    kind: FeatureKind,
    rows: &[FeatureRow],
    folds: &[Fold],
    cfg: &TrainConfig,
    k: usize,
) -> Result<FoldScore, MlpError> {
    let train = pick(rows, &folds[k].train);
    let valid = pick(rows, &folds[k].valid);
    let fold_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, &[k as u64]),
        ..cfg.clone()
    };
    let out = train_mlp(kind, &train, Some(&valid), &fold_cfg)?;
    Ok(score(&out.model, &train, &valid, out.best_epoch))
}

pub fn cross_validate_historical(
    rows: &[FeatureRow],
    folds: &[Fold],
) -> Result<CvReport, BaselineError> {
    let scores = folds
        .iter()
        .map(|f| {
            let train = pick(rows, &f.train);
            let valid = pick(rows, &f.valid);
            let model = Historical::fit(&train.iter().map(|r| r.label).collect::<Vec<_>>())?;
            Ok(score(&model, &train, &valid, 0))
        })
        .collect::<Result<Vec<_>, BaselineError>>()?;
    Ok(CvReport::from_folds("historical".into(), scores))
}

pub fn cross_validate_elastic_net(
    rows: &[FeatureRow],
    folds: &[Fold],
    l1_ratio: f64,
    strength: f64,
) -> Result<CvReport, BaselineError> {
    let scores = folds
        .iter()
        .map(|f| {
            let train = pick(rows, &f.train);
            let valid = pick(rows, &f.valid);
            let model = ElasticNet::fit(&train, l1_ratio, strength)?;
            Ok(score(&model, &train, &valid, 0))
        })
        .collect::<Result<Vec<_>, BaselineError>>()?;
    Ok(CvReport::from_folds(
        format!("elastic-net l1_ratio={l1_ratio} strength={strength}"),
        scores,
    ))
}

/// Best elastic net over the fixed `l1_ratio x strength` grid.
pub fn elastic_net_search(
    rows: &[FeatureRow],
    folds: &[Fold],
) -> Result<(f64, f64, Vec<CvReport>), BaselineError> {
    let mut table = Vec::new();
    let mut settings = Vec::new();
    for &r in &ElasticNet::L1_RATIOS {
        for &s in &ElasticNet::STRENGTHS {
            table.push(cross_validate_elastic_net(rows, folds, r, s)?);
            settings.push((r, s));
        }
    }
    let best = select_best(&table);
    Ok((settings[best].0, settings[best].1, table))
}

/// Searched hyperparameter sets.
pub const GRID_LAYERS: [usize; 3] = [1, 2, 3];
pub const GRID_HIDDEN: [usize; 3] = [32, 64, 128];
pub const GRID_DROPOUT: [f64; 3] = [0.0, 0.1, 0.2];
pub const GRID_EMB: [usize; 3] = [1, 2, 3];

/// Every combination of the searched sets, other fields from `base`.
pub fn full_grid(base: &TrainConfig) -> Vec<TrainConfig> {
    let mut grid = Vec::with_capacity(243);
    for &num_layers in &GRID_LAYERS {
        for &hidden_dim in &GRID_HIDDEN {
            for &dropout in &GRID_DROPOUT {
                for activation in Activation::ALL {
                    for &emb_dim in &GRID_EMB {
                        grid.push(TrainConfig {
                            num_layers,
                            hidden_dim,
                            dropout,
                            activation,
                            emb_dim,
                            ..base.clone()
                        });
                    }
                }
            }
        }
    }
    grid
}

/// Index of the lowest mean weighted CEL; ties keep the earlier entry.
pub fn select_best(table: &[CvReport]) -> usize {
    let mut best = 0;
    for (i, r) in table.iter().enumerate() {
        if r.mean_weighted < table[best].mean_weighted {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: TrainConfig,
    pub table: Vec<(TrainConfig, CvReport)>,
}

/// Train every (config, fold) pair, in parallel, and pick the config with the
/// lowest mean validation weighted CEL.
pub fn grid_search_cv(
    kind: FeatureKind,
    rows: &[FeatureRow],
    folds: &[Fold],
    grid: &[TrainConfig],
) -> Result<GridResult, MlpError> {
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..folds.len()).map(move |k| (c, k)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, k)| cv_fold(kind, rows, folds, &grid[c], k))
        .collect::<Result<Vec<_>, _>>()?;
    let reports: Vec<CvReport> = grid
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let per = scores[c * folds.len()..(c + 1) * folds.len()].to_vec();
            CvReport::from_folds(cfg.label(), per)
        })
        .collect();
    let best = select_best(&reports);
    Ok(GridResult {
        best: grid[best].clone(),
        table: grid.iter().cloned().zip(reports).collect(),
    })
}

/// Final model on all training rows, run for the median checkpoint epoch
/// seen in cross-validation (no held-out rows are touched).
pub fn fit_final(
    kind: FeatureKind,
    rows: &[FeatureRow],
    cfg: &TrainConfig,
    report: Option<&CvReport>,
) -> Result<ClassifierModel, MlpError> {
    let epochs = match report {
        Some(r) if !r.folds.is_empty() => {
            let mut e: Vec<usize> = r.folds.iter().map(|f| f.best_epoch).collect();
            e.sort_unstable();
            e[e.len() / 2].max(1)
        }
        _ => cfg.epochs,
    };
    let cfg = TrainConfig {
        epochs,
        ..cfg.clone()
    };
    Ok(train_mlp(kind, rows, None, &cfg)?.model)
}
