//! Online ARIMA(mk, d, 0): an AR approximation over the d-times differenced
//! series, learned one sample at a time.
//!
//! The forecast for the next point is
//!
//! ```text
//! x̃_t = Σ_{i=1..mk} γ_i ∇^d x_{t-i} + Σ_{i=0..d-1} ∇^i x_{t-1}
//! ```
//!
//! where `γ_1` weights the most recent d-th difference and each `∇^i x_{t-1}`
//! is the i-th difference ending at the newest observation. The loss driving
//! the optimizer is the squared error `(x̃_t - x_t)^2`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::optimizer::OptimizerState;
use crate::rng::SeededRng;
use crate::series::difference_in_place;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Window size of the AR approximation.
    pub mk: usize,
    /// Differencing order.
    pub d: usize,
    pub init_lo: f64,
    pub init_hi: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// Coefficients start uniform on `[-0.5, 0.5]`.
    pub fn new(mk: usize, d: usize, seed: u64) -> Self {
        Self {
            mk,
            d,
            init_lo: -0.5,
            init_hi: 0.5,
            seed,
        }
    }

    /// Samples needed before the first forecast.
    pub fn warm_up(&self) -> usize {
        self.mk + self.d
    }

    pub fn validate(&self) -> Result<()> {
        if self.mk == 0 {
            return Err(Error::InvalidConfig("mk must be at least 1".into()));
        }
        if !(self.init_lo <= self.init_hi) || !self.init_lo.is_finite() || !self.init_hi.is_finite()
        {
            return Err(Error::InvalidConfig(format!(
                "invalid initialization range [{}, {}]",
                self.init_lo, self.init_hi
            )));
        }
        Ok(())
    }
}

/// One scored forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub actual: f64,
    /// `value - actual`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// The sample went into the history; no forecast was possible yet.
    WarmUp,
    Predicted(Prediction),
}

impl StepOutcome {
    pub fn prediction(&self) -> Option<&Prediction> {
        match self {
            StepOutcome::WarmUp => None,
            StepOutcome::Predicted(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArimaModel {
    config: ModelConfig,
    gamma: Vec<f64>,
    /// Last `mk + d` raw observations, oldest first.
    history: VecDeque<f64>,
    samples_seen: u64,
    scratch: Vec<f64>,
}

impl ArimaModel {
    /// Draws `gamma` uniformly from the configured range using the seeded
    /// generator.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        let gamma = (0..config.mk)
            .map(|_| rng.uniform_range(config.init_lo, config.init_hi))
            .collect();
        Self::with_gamma(config, gamma)
    }

    pub fn with_gamma(config: ModelConfig, gamma: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if gamma.len() != config.mk {
            return Err(Error::DimensionMismatch {
                expected: config.mk,
                got: gamma.len(),
            });
        }
        Ok(Self {
            config,
            gamma,
            history: VecDeque::with_capacity(config.warm_up() + 1),
            samples_seen: 0,
            scratch: Vec::with_capacity(config.warm_up()),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &f64> + '_ {
        self.history.iter()
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    pub fn is_warm(&self) -> bool {
        self.history.len() == self.config.warm_up()
    }

    /// Appends an observation without learning, evicting the oldest one once
    /// the window is full.
    pub fn observe(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::InvalidSample(x));
        }
        if self.is_warm() {
            self.history.pop_front();
        }
        self.history.push_back(x);
        self.samples_seen += 1;
        Ok(())
    }

    fn ensure_warm(&self) -> Result<()> {
        if self.is_warm() {
            Ok(())
        } else {
            Err(Error::WarmUpIncomplete {
                have: self.history.len(),
                need: self.config.warm_up(),
            })
        }
    }

    /// Fills `features` with the mk most recent d-th differences, newest
    /// first, and returns the integration term `Σ_{i<d} ∇^i x_{t-1}`.
    fn regressors(&self, features: &mut Vec<f64>) -> f64 {
        features.clear();
        features.extend(self.history.iter().copied());
        let mut integration = 0.0;
        for _ in 0..self.config.d {
            integration += features[features.len() - 1];
            difference_in_place(features, 1);
        }
        features.reverse();
        integration
    }

    fn forecast_with(&self, features: &mut Vec<f64>) -> f64 {
        let integration = self.regressors(features);
        let ar: f64 = self.gamma.iter().zip(features.iter()).map(|(g, x)| g * x).sum();
        ar + integration
    }

    /// One-step-ahead forecast from the current history.
    pub fn predict(&self) -> Result<f64> {
        self.ensure_warm()?;
        let mut features = Vec::with_capacity(self.config.warm_up());
        Ok(self.forecast_with(&mut features))
    }

    /// Gradient of `(x̃_t - actual)^2` with respect to `gamma`.
    pub fn gradient(&self, actual: f64) -> Result<Vec<f64>> {
        self.ensure_warm()?;
        let mut features = Vec::with_capacity(self.config.warm_up());
        let residual = self.forecast_with(&mut features) - actual;
        Ok(features.iter().map(|x| 2.0 * residual * x).collect())
    }

    /// Processes one incoming sample: forecast it from the past, take one
    /// optimizer step on the squared error, then append it to the history.
    /// While the history is still filling, the sample is only buffered.
    pub fn learn_step(&mut self, optimizer: &mut OptimizerState, actual: f64) -> Result<StepOutcome> {
        if !actual.is_finite() {
            return Err(Error::InvalidSample(actual));
        }
        if !self.is_warm() {
            self.observe(actual)?;
            return Ok(StepOutcome::WarmUp);
        }
        let mut features = std::mem::take(&mut self.scratch);
        let value = self.forecast_with(&mut features);
        let residual = value - actual;
        for x in features.iter_mut() {
            *x *= 2.0 * residual;
        }
        let stepped = optimizer.step(&mut self.gamma, &features);
        self.scratch = features;
        stepped?;
        self.observe(actual)?;
        Ok(StepOutcome::Predicted(Prediction {
            value,
            actual,
            residual,
        }))
    }
}
