//! Decision analysis for football 1-vs-1 shot-taking situations.
//!
//! The crate fits a geometric shot-block model and MLP outcome classifiers on
//! StatsBomb open data, composes the shot-on-target metrics for the shooter
//! and every off-ball teammate, and solves the shooter-vs-closest-defender
//! 2x2 zero-sum game.

pub mod analysis;
pub mod game;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod nnet;
pub mod optim;
pub mod pitch_control;
pub mod scenario;
pub mod special;
pub mod stats;
pub mod theory;
