//! Fully connected network with a role embedding and one sigmoid output.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MlpError {
    #[error("expected {expected} numeric inputs, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("role index {index} outside a vocabulary of {len}")]
    Role { index: usize, len: usize },
    #[error("network parameters contain NaN")]
    NaN,
    #[error("training loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("training rows need both labels present")]
    SingleClass,
    #[error("no training rows")]
    Empty,
    #[error("parameter vector has {got} entries, architecture needs {expected}")]
    ParamCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Sigmoid, Activation::Tanh];

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        })
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub n_roles: usize,
    pub emb_dim: usize,
    pub n_numeric: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
}

impl Architecture {
    pub fn input_dim(&self) -> usize {
        self.emb_dim + self.n_numeric
    }

    /// `(fan_in, fan_out)` of every dense layer, output layer last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut fan_in = self.input_dim();
        for &h in &self.hidden {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims.push((fan_in, 1));
        dims
    }

    fn embedding_len(&self) -> usize {
        self.n_roles * self.emb_dim
    }

    pub fn n_params(&self) -> usize {
        self.embedding_len()
            + self
                .layer_dims()
                .iter()
                .map(|(i, o)| i * o + o)
                .sum::<usize>()
    }

    /// Offsets of each layer's weight block (row-major, out x in) and bias.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut at = self.embedding_len();
        self.layer_dims()
            .iter()
            .map(|&(i, o)| {
                let w = at;
                let b = w + i * o;
                at = b + o;
                (w, b)
            })
            .collect()
    }
}

/// Flat-parameter MLP: the embedding table first, then each layer's weights
/// and bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

/// Activations kept from a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    role: usize,
    /// Input to every dense layer (after dropout for hidden outputs).
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    pub logit: f64,
}

impl Mlp {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, N(0, 1)
    /// embedding rows.
    pub fn init<R: Rng>(arch: Architecture, rng: &mut R) -> Self {
        let mut params = Vec::with_capacity(arch.n_params());
        for _ in 0..arch.embedding_len() {
            params.push(StandardNormal.sample(rng));
        }
        for (fan_in, fan_out) in arch.layer_dims() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out + fan_out {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Self { arch, params }
    }

    pub fn zeros(arch: Architecture) -> Self {
        let params = vec![0.0; arch.n_params()];
        Self { arch, params }
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self, MlpError> {
        if params.len() != arch.n_params() {
            return Err(MlpError::ParamCount {
                expected: arch.n_params(),
                got: params.len(),
            });
        }
        Ok(Self { arch, params })
    }

    fn check(&self, role: usize, x: &[f64]) -> Result<(), MlpError> {
        if x.len() != self.arch.n_numeric {
            return Err(MlpError::Shape {
                expected: self.arch.n_numeric,
                got: x.len(),
            });
        }
        if role >= self.arch.n_roles {
            return Err(MlpError::Role {
                index: role,
                len: self.arch.n_roles,
            });
        }
        if self.params.iter().any(|p| p.is_nan()) {
            return Err(MlpError::NaN);
        }
        Ok(())
    }

    /// Probability for one (already standardized) input. In train mode the
    /// hidden outputs are dropped with inverted scaling using `rng`.
    pub fn forward<R: Rng>(
        &self,
        role: usize,
        x: &[f64],
        train_mode: bool,
        rng: &mut R,
    ) -> Result<f64, MlpError> {
        self.check(role, x)?;
        let masks = if train_mode {
            self.sample_masks(rng)
        } else {
            Vec::new()
        };
        Ok(sigmoid(self.forward_cached(role, x, &masks).logit))
    }

    /// Eval-mode probability without validation.
    pub fn predict(&self, role: usize, x: &[f64]) -> f64 {
        sigmoid(self.forward_cached(role, x, &[]).logit)
    }

    pub fn sample_masks<R: Rng>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        let rate = self.arch.dropout;
        if rate <= 0.0 {
            return Vec::new();
        }
        let keep = 1.0 / (1.0 - rate);
        self.arch
            .hidden
            .iter()
            .map(|&h| {
                (0..h)
                    .map(|_| {
                        if rng.random::<f64>() < rate {
                            0.0
                        } else {
                            keep
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Forward pass keeping what backprop needs. `masks` is empty or holds one
    /// multiplier vector per hidden layer.
    pub fn forward_cached(&self, role: usize, x: &[f64], masks: &[Vec<f64>]) -> Cache {
        let arch = &self.arch;
        let mut input = Vec::with_capacity(arch.input_dim());
        input.extend_from_slice(&self.params[role * arch.emb_dim..(role + 1) * arch.emb_dim]);
        input.extend_from_slice(x);
        let dims = arch.layer_dims();
        let offsets = arch.offsets();
        let last = dims.len() - 1;
        let mut inputs = Vec::with_capacity(dims.len());
        let mut pre = Vec::with_capacity(last);
        let mut post = Vec::with_capacity(last);
        let mut logit = 0.0;
        for (l, (&(fan_in, fan_out), &(w_at, b_at))) in dims.iter().zip(&offsets).enumerate() {
            let w = &self.params[w_at..w_at + fan_in * fan_out];
            let b = &self.params[b_at..b_at + fan_out];
            let z: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    b[o] + row.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if l == last {
                logit = z[0];
                inputs.push(input);
                break;
            }
            let a: Vec<f64> = z.iter().map(|&v| arch.activation.apply(v)).collect();
            let out = match masks.get(l) {
                Some(m) => a.iter().zip(m).map(|(v, k)| v * k).collect(),
                None => a.clone(),
            };
            inputs.push(std::mem::replace(&mut input, out));
            pre.push(z);
            post.push(a);
        }
        Cache {
            role,
            inputs,
            pre,
            post,
            logit,
        }
    }

    /// Accumulate `dlogit * d(logit)/d(params)` into `grad`.
    pub fn backward(&self, cache: &Cache, masks: &[Vec<f64>], dlogit: f64, grad: &mut [f64]) {
        let arch = &self.arch;
        let dims = arch.layer_dims();
        let offsets = arch.offsets();
        let mut delta = vec![dlogit];
        for l in (0..dims.len()).rev() {
            let (fan_in, fan_out) = dims[l];
            let (w_at, b_at) = offsets[l];
            let input = &cache.inputs[l];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grad[b_at + o] += d;
                let g = &mut grad[w_at + o * fan_in..w_at + (o + 1) * fan_in];
                for (gi, xi) in g.iter_mut().zip(input) {
                    *gi += d * xi;
                }
            }
            let w = &self.params[w_at..w_at + fan_in * fan_out];
            let mut d_input = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (di, wi) in d_input.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *di += d * wi;
                }
            }
            if l == 0 {
                let e = cache.role * arch.emb_dim;
                for k in 0..arch.emb_dim {
                    grad[e + k] += d_input[k];
                }
            } else {
                let h = l - 1;
                let mask = masks.get(h);
                delta = d_input
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| {
                        let m = mask.map_or(1.0, |m| m[i]);
                        d * m
                            * arch
                                .activation
                                .derivative(cache.pre[h][i], cache.post[h][i])
                    })
                    .collect();
            }
        }
    }
}

/// sum_i w_i * BCE(sigmoid(logit_i), y_i) with fixed dropout masks.
fn batch_loss(m: &Mlp, batch: &[(usize, Vec<f64>, f64, f64)], masks: &[Vec<Vec<f64>>]) -> f64 {
    batch
        .iter()
        .zip(masks)
        .map(|((r, x, y, w), mk)| {
            let z = m.forward_cached(*r, x, mk).logit;
            // softplus(z) - y z
            w * ((1.0 + (-z.abs()).exp()).ln() + z.max(0.0) - y * z)
        })
        .sum()
}

/// Gradient check: analytic backprop against central differences (step
/// 1e-5 relative) on a random 5-row weighted batch with fixed dropout masks.
/// Returns the worst relative error over all parameters.
pub fn max_relative_gradient_error(activation: Activation, dropout: f64, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = Mlp::init(
        Architecture {
            n_roles: 4,
            emb_dim: 2,
            n_numeric: 5,
            hidden: vec![7, 6],
            activation,
            dropout,
        },
        &mut rng,
    );
    let batch: Vec<(usize, Vec<f64>, f64, f64)> = (0..5)
        .map(|i| {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            (i % 4, x, (i % 2) as f64, 0.5 + i as f64 * 0.25)
        })
        .collect();
    let masks: Vec<Vec<Vec<f64>>> = batch.iter().map(|_| m.sample_masks(&mut rng)).collect();
    let mut grad = vec![0.0; m.params.len()];
    for ((r, x, y, w), mk) in batch.iter().zip(&masks) {
        let cache = m.forward_cached(*r, x, mk);
        m.backward(&cache, mk, w * (sigmoid(cache.logit) - y), &mut grad);
    }
    let mut worst: f64 = 0.0;
    for k in 0..m.params.len() {
        let h = 1e-5 * m.params[k].abs().max(1.0);
        let mut plus = m.clone();
        plus.params[k] += h;
        let mut minus = m.clone();
        minus.params[k] -= h;
        let numeric =
            (batch_loss(&plus, &batch, &masks) - batch_loss(&minus, &batch, &masks)) / (2.0 * h);
        let denom = grad[k].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((grad[k] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arch(activation: Activation, hidden: Vec<usize>, dropout: f64) -> Architecture {
        Architecture {
            n_roles: 4,
            emb_dim: 2,
            n_numeric: 5,
            hidden,
            activation,
            dropout,
        }
    }

    #[test]
    fn zero_network_outputs_half() {
        let m = Mlp::zeros(arch(Activation::Tanh, vec![8, 8], 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = m
            .forward(1, &[0.3, -1.0, 2.0, 0.0, 5.0], false, &mut rng)
            .unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn no_dropout_train_equals_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mlp::init(arch(Activation::Relu, vec![16], 0.0), &mut rng);
        let x = [0.3, -1.0, 2.0, 0.0, 5.0];
        let a = m.forward(2, &x, true, &mut rng).unwrap();
        let b = m.forward(2, &x, false, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn shape_role_and_nan_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = Mlp::init(arch(Activation::Relu, vec![4], 0.0), &mut rng);
        assert!(matches!(
            m.forward(0, &[0.0; 3], false, &mut rng),
            Err(MlpError::Shape { .. })
        ));
        assert!(matches!(
            m.forward(9, &[0.0; 5], false, &mut rng),
            Err(MlpError::Role { .. })
        ));
        m.params[7] = f64::NAN;
        assert_eq!(m.forward(0, &[0.0; 5], false, &mut rng), Err(MlpError::NaN));
    }

    #[test]
    fn dropout_masks_use_inverted_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::zeros(arch(Activation::Relu, vec![1000], 0.2));
        let masks = m.sample_masks(&mut rng);
        let kept = masks[0].iter().filter(|v| **v > 0.0).count();
        assert!(masks[0]
            .iter()
            .all(|v| *v == 0.0 || (*v - 1.25).abs() < 1e-12));
        assert!((kept as f64 / 1000.0 - 0.8).abs() < 0.05);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for act in Activation::ALL {
            for (seed, dropout) in [(1, 0.0), (2, 0.2)] {
                let err = super::max_relative_gradient_error(act, dropout, seed);
                assert!(err < 1e-4, "{act} dropout {dropout}: {err}");
            }
        }
    }

    #[test]
    fn param_count_matches_layout() {
        let a = arch(Activation::Tanh, vec![128], 0.0);
        // 4*2 embedding + (7*128 + 128) + (128 + 1)
        assert_eq!(a.n_params(), 8 + 7 * 128 + 128 + 129);
        assert!(Mlp::from_params(a, vec![0.0; 3]).is_err());
    }
}
