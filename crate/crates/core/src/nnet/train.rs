//! Mini-batch Adam training on the inverse-class-weighted cross-entropy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureKind, FeatureRow, RoleVocab, Standardizer};
use super::mlp::{sigmoid, Activation, Architecture, Mlp, MlpError};
use super::model::{ClassifierModel, MODEL_VERSION};
use crate::stats::{clamp_prob, neumaier_sum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Hidden layers.
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub activation: Activation,
    pub emb_dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// `[negative, positive]`; `None` means inverse class frequency of the
    /// training rows.
    pub class_weights: Option<[f64; 2]>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_layers: 1,
            hidden_dim: 64,
            dropout: 0.0,
            activation: Activation::Relu,
            emb_dim: 1,
            lr: 1e-3,
            epochs: 300,
            batch_size: 32,
            seed: 0,
            class_weights: None,
        }
    }
}

impl TrainConfig {
    /// Best shot-off configuration from the reference grid search.
    pub fn reference_off() -> Self {
        Self {
            num_layers: 1,
            hidden_dim: 128,
            dropout: 0.0,
            activation: Activation::Tanh,
            emb_dim: 2,
            ..Self::default()
        }
    }

    /// Best shot-block configuration from the reference grid search.
    pub fn reference_block() -> Self {
        Self {
            num_layers: 2,
            hidden_dim: 64,
            dropout: 0.0,
            activation: Activation::Sigmoid,
            emb_dim: 1,
            ..Self::default()
        }
    }

    pub fn reference_for(kind: FeatureKind) -> Self {
        match kind {
            FeatureKind::Off => Self::reference_off(),
            _ => Self::reference_block(),
        }
    }

    pub fn architecture(&self, n_roles: usize, n_numeric: usize) -> Architecture {
        Architecture {
            n_roles,
            emb_dim: self.emb_dim,
            n_numeric,
            hidden: vec![self.hidden_dim; self.num_layers],
            activation: self.activation,
            dropout: self.dropout,
        }
    }

    pub fn label(&self) -> String {
        format!(
            "layers={} hidden={} dropout={} act={} emb={}",
            self.num_layers, self.hidden_dim, self.dropout, self.activation, self.emb_dim
        )
    }
}

/// `w_c = N / (2 N_c)`, returned as `[negative, positive]`.
pub fn inverse_class_weights(labels: &[bool]) -> [f64; 2] {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let neg = n - pos;
    let w = |c: f64| if c > 0.0 { n / (2.0 * c) } else { 0.0 };
    [w(neg), w(pos)]
}

/// `-mean_i w_{y_i} [y log p + (1 - y) log(1 - p)]` with clamped `p`.
pub fn weighted_cel(probs: &[f64], labels: &[bool], weights: [f64; 2]) -> f64 {
    assert_eq!(probs.len(), labels.len());
    let terms: Vec<f64> = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            if y {
                -weights[1] * p.ln()
            } else {
                -weights[0] * (1.0 - p).ln()
            }
        })
        .collect();
    neumaier_sum(&terms) / probs.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

struct Prepared {
    roles: Vec<usize>,
    x: Vec<Vec<f64>>,
    y: Vec<bool>,
}

fn prepare(rows: &[FeatureRow], vocab: &RoleVocab, std: &Standardizer) -> Prepared {
    Prepared {
        roles: rows.iter().map(|r| vocab.index(&r.role)).collect(),
        x: rows.iter().map(|r| std.apply(&r.numeric)).collect(),
        y: rows.iter().map(|r| r.label).collect(),
    }
}

fn eval_loss(net: &Mlp, data: &Prepared, weights: [f64; 2]) -> f64 {
    let probs: Vec<f64> = data
        .roles
        .iter()
        .zip(&data.x)
        .map(|(&r, x)| net.predict(r, x))
        .collect();
    weighted_cel(&probs, &data.y, weights)
}

/// Train one network. With `valid` rows the parameters from the epoch with the
/// lowest validation loss are returned; otherwise those after the last epoch.
pub fn train_mlp(
    kind: FeatureKind,
    train: &[FeatureRow],
    valid: Option<&[FeatureRow]>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, MlpError> {
    if train.is_empty() {
        return Err(MlpError::Empty);
    }
    let labels: Vec<bool> = train.iter().map(|r| r.label).collect();
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(MlpError::SingleClass);
    }
    let expected = kind.numeric_len();
    if let Some(bad) = train.iter().find(|r| r.numeric.len() != expected) {
        return Err(MlpError::Shape {
            expected,
            got: bad.numeric.len(),
        });
    }
    let weights = cfg
        .class_weights
        .unwrap_or_else(|| inverse_class_weights(&labels));
    let vocab = RoleVocab::from_rows(train);
    let standardizer = Standardizer::fit(train);
    let data = prepare(train, &vocab, &standardizer);
    let valid_data = valid.map(|v| prepare(v, &vocab, &standardizer));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::init(cfg.architecture(vocab.len(), expected), &mut rng);
    let mut adam = Adam::new(net.params.len(), cfg.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; net.params.len()];
    let mut best = (f64::INFINITY, 0usize, net.params.clone());
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut valid_loss = Vec::new();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_terms = Vec::with_capacity(train.len());
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let masks = net.sample_masks(&mut rng);
                let cache = net.forward_cached(data.roles[i], &data.x[i], &masks);
                let y = if data.y[i] { 1.0 } else { 0.0 };
                let w = weights[data.y[i] as usize];
                let z = cache.logit;
                epoch_terms.push(w * ((1.0 + (-z.abs()).exp()).ln() + z.max(0.0) - y * z));
                net.backward(&cache, &masks, scale * w * (sigmoid(z) - y), &mut grad);
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(MlpError::Diverged { epoch });
            }
            adam.step(&mut net.params, &grad);
        }
        let loss = neumaier_sum(&epoch_terms) / train.len() as f64;
        if !loss.is_finite() || net.params.iter().any(|p| !p.is_finite()) {
            return Err(MlpError::Diverged { epoch });
        }
        train_loss.push(loss);
        if let Some(vd) = &valid_data {
            let vl = eval_loss(&net, vd, weights);
            valid_loss.push(vl);
            if vl < best.0 {
                best = (vl, epoch, net.params.clone());
            }
        }
    }
    let best_epoch = if valid_data.is_some() {
        net.params = best.2;
        best.1
    } else {
        cfg.epochs
    };
    Ok(TrainOutcome {
        model: ClassifierModel {
            version: MODEL_VERSION,
            kind,
            config: cfg.clone(),
            vocab,
            standardizer,
            net,
        },
        best_epoch,
        train_loss,
        valid_loss,
    })
}
