//! Online ARIMA forecasting with a family of online-gradient-descent
//! optimizers, including a blended optimizer that graduates from AMSGrad to
//! Momentum, plus the data generators, loaders and experiment harness used to
//! compare them.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod model;
pub mod optimizer;
pub mod plot;
pub mod rng;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
pub use model::{ArimaModel, ModelConfig, Prediction, StepOutcome};
pub use optimizer::{blend_combined, Hyperparams, OptimizerKind, OptimizerState, UpdateDirection};
pub use series::{MicroBatch, NormalizationParams, TimeSeries};
