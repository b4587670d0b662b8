//! Outcome classifiers (shot off target, shot blocked) and their baselines.

pub mod baselines;
pub mod cv;
pub mod features;
pub mod mlp;
pub mod model;
pub mod train;

pub use baselines::{ElasticNet, Historical, Predictor};
pub use cv::{cross_validate, full_grid, grid_search_cv, CvReport, GridResult};
pub use features::{FeatureKind, FeatureRow, RoleVocab, Standardizer, UNKNOWN_ROLE};
pub use mlp::{Activation, Mlp, MlpError};
pub use model::{ClassifierModel, ModelError};
pub use train::{inverse_class_weights, train_mlp, weighted_cel, TrainConfig};
