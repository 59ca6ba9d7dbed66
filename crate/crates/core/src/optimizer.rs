//! Online-gradient-descent update rules.
//!
//! Every rule is expressed as an [`UpdateDirection`]: the vector that gets
//! subtracted from the coefficients, already scaled by the learning rate and
//! any per-parameter adaptivity. [`OptimizerState::direction`] advances the
//! rule's internal state and returns that vector; [`OptimizerState::step`]
//! also applies it.
//!
//! The `Combined` rule runs AMSGrad and Momentum side by side on the same
//! gradient and ramps linearly from the AMSGrad direction to the Momentum
//! direction over `lambda` steps (see [`blend_combined`]). Both inner states
//! advance on every step, so Momentum takes over with a velocity that has seen
//! the whole gradient history.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Basic,
    Momentum,
    Nesterov,
    Adagrad,
    RmsProp,
    Adam,
    AmsGrad,
    Combined { lambda: f64 },
}

impl OptimizerKind {
    /// The seven non-blended rules, in plotting order.
    pub const BASELINES: [OptimizerKind; 7] = [
        OptimizerKind::Basic,
        OptimizerKind::Momentum,
        OptimizerKind::Nesterov,
        OptimizerKind::Adagrad,
        OptimizerKind::RmsProp,
        OptimizerKind::Adam,
        OptimizerKind::AmsGrad,
    ];

    /// All baselines followed by `Combined` with the given ramp length.
    pub fn all(lambda: f64) -> Vec<OptimizerKind> {
        let mut kinds = Self::BASELINES.to_vec();
        kinds.push(OptimizerKind::Combined { lambda });
        kinds
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Basic => "basic",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Nesterov => "nesterov",
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Adam => "adam",
            OptimizerKind::AmsGrad => "amsgrad",
            OptimizerKind::Combined { .. } => "combined",
        }
    }

    /// Parses an optimizer name; `combined` takes its ramp length from
    /// `lambda`.
    pub fn parse(name: &str, lambda: f64) -> Result<Self> {
        let kind = match name.to_ascii_lowercase().as_str() {
            "basic" | "sgd" => OptimizerKind::Basic,
            "momentum" => OptimizerKind::Momentum,
            "nesterov" => OptimizerKind::Nesterov,
            "adagrad" => OptimizerKind::Adagrad,
            "rmsprop" => OptimizerKind::RmsProp,
            "adam" => OptimizerKind::Adam,
            "amsgrad" => OptimizerKind::AmsGrad,
            "combined" => OptimizerKind::Combined { lambda },
            other => return Err(Error::Usage(format!("unknown optimizer '{other}'"))),
        };
        Ok(kind)
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerKind::Combined { lambda } => write!(f, "combined(lambda={lambda})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    /// Accepts plain names and `combined:<lambda>`; bare `combined` uses
    /// lambda = 2000.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((name, lambda)) if name.eq_ignore_ascii_case("combined") => {
                let lambda = lambda
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("invalid lambda in '{s}'")))?;
                Ok(OptimizerKind::Combined { lambda })
            }
            _ => OptimizerKind::parse(s, 2000.0),
        }
    }
}

/// Hyperparameters shared by all rules; each rule reads only the fields it
/// needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    /// Momentum/Nesterov velocity decay.
    pub momentum: f64,
    /// RMSProp squared-gradient decay.
    pub rho: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            rho: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl Hyperparams {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidHyperparameter(format!(
                    "{name} must lie in [0, 1), got {v}"
                )))
            }
        };
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        unit("momentum", self.momentum)?;
        unit("rho", self.rho)?;
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// The quantity subtracted from the coefficients in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDirection(pub Vec<f64>);

impl UpdateDirection {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Basic,
    Momentum {
        velocity: Vec<f64>,
    },
    Nesterov {
        velocity: Vec<f64>,
    },
    Adagrad {
        grad_sq_accum: Vec<f64>,
    },
    RmsProp {
        sq_moving_avg: Vec<f64>,
    },
    Adam {
        first_moment: Vec<f64>,
        second_moment: Vec<f64>,
    },
    AmsGrad {
        first_moment: Vec<f64>,
        second_moment: Vec<f64>,
        second_moment_max: Vec<f64>,
    },
    Combined {
        lambda: f64,
        adaptive: Box<OptimizerState>,
        momentum: Box<OptimizerState>,
    },
}

/// Mutable state of one optimizer over a coefficient vector of fixed
/// dimension.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    hyper: Hyperparams,
    dim: usize,
    step_count: u64,
    rule: Rule,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, hyper: Hyperparams, dim: usize) -> Result<Self> {
        hyper.validate()?;
        let zeros = || vec![0.0; dim];
        let rule = match kind {
            OptimizerKind::Basic => Rule::Basic,
            OptimizerKind::Momentum => Rule::Momentum { velocity: zeros() },
            OptimizerKind::Nesterov => Rule::Nesterov { velocity: zeros() },
            OptimizerKind::Adagrad => Rule::Adagrad {
                grad_sq_accum: zeros(),
            },
            OptimizerKind::RmsProp => Rule::RmsProp {
                sq_moving_avg: zeros(),
            },
            OptimizerKind::Adam => Rule::Adam {
                first_moment: zeros(),
                second_moment: zeros(),
            },
            OptimizerKind::AmsGrad => Rule::AmsGrad {
                first_moment: zeros(),
                second_moment: zeros(),
                second_moment_max: zeros(),
            },
            OptimizerKind::Combined { lambda } => {
                if !(lambda > 0.0) {
                    return Err(Error::InvalidHyperparameter(format!(
                        "lambda must be positive, got {lambda}"
                    )));
                }
                Rule::Combined {
                    lambda,
                    adaptive: Box::new(Self::new(OptimizerKind::AmsGrad, hyper, dim)?),
                    momentum: Box::new(Self::new(OptimizerKind::Momentum, hyper, dim)?),
                }
            }
        };
        Ok(Self {
            kind,
            hyper,
            dim,
            step_count: 0,
            rule,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of completed steps.
    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Velocity of Momentum/Nesterov, or of the Momentum half of Combined.
    pub fn velocity(&self) -> Option<&[f64]> {
        match &self.rule {
            Rule::Momentum { velocity } | Rule::Nesterov { velocity } => Some(velocity),
            Rule::Combined { momentum, .. } => momentum.velocity(),
            _ => None,
        }
    }

    /// AMSGrad's running maximum of the second moment.
    pub fn second_moment_max(&self) -> Option<&[f64]> {
        match &self.rule {
            Rule::AmsGrad {
                second_moment_max, ..
            } => Some(second_moment_max),
            Rule::Combined { adaptive, .. } => adaptive.second_moment_max(),
            _ => None,
        }
    }

    /// Inner (AMSGrad, Momentum) states of a Combined optimizer.
    pub fn sub_states(&self) -> Option<(&OptimizerState, &OptimizerState)> {
        match &self.rule {
            Rule::Combined {
                adaptive, momentum, ..
            } => Some((adaptive, momentum)),
            _ => None,
        }
    }

    /// Consumes one gradient, advances the state and returns the update to
    /// subtract from the coefficients.
    pub fn direction(&mut self, grad: &[f64]) -> Result<UpdateDirection> {
        if grad.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grad.len(),
            });
        }
        let t = self.step_count;
        let Hyperparams {
            learning_rate: lr,
            momentum: mu,
            rho,
            beta1,
            beta2,
            epsilon: eps,
        } = self.hyper;

        let delta = match &mut self.rule {
            Rule::Basic => grad.iter().map(|g| lr * g).collect(),
            Rule::Momentum { velocity } => {
                for (v, g) in velocity.iter_mut().zip(grad) {
                    *v = mu * *v + lr * g;
                }
                velocity.clone()
            }
            Rule::Nesterov { velocity } => velocity
                .iter_mut()
                .zip(grad)
                .map(|(v, g)| {
                    *v = mu * *v + lr * g;
                    mu * *v + lr * g
                })
                .collect(),
            Rule::Adagrad { grad_sq_accum } => grad_sq_accum
                .iter_mut()
                .zip(grad)
                .map(|(acc, g)| {
                    *acc += g * g;
                    lr * g / (acc.sqrt() + eps)
                })
                .collect(),
            Rule::RmsProp { sq_moving_avg } => sq_moving_avg
                .iter_mut()
                .zip(grad)
                .map(|(s, g)| {
                    *s = rho * *s + (1.0 - rho) * g * g;
                    lr * g / (s.sqrt() + eps)
                })
                .collect(),
            Rule::Adam {
                first_moment,
                second_moment,
            } => {
                let step = bias_exponent(t + 1);
                let c1 = 1.0 - beta1.powi(step);
                let c2 = 1.0 - beta2.powi(step);
                first_moment
                    .iter_mut()
                    .zip(second_moment.iter_mut())
                    .zip(grad)
                    .map(|((m, v), g)| {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        lr * (*m / c1) / ((*v / c2).sqrt() + eps)
                    })
                    .collect()
            }
            Rule::AmsGrad {
                first_moment,
                second_moment,
                second_moment_max,
            } => {
                let c1 = 1.0 - beta1.powi(bias_exponent(t + 1));
                first_moment
                    .iter_mut()
                    .zip(second_moment.iter_mut())
                    .zip(second_moment_max.iter_mut())
                    .zip(grad)
                    .map(|(((m, v), v_max), g)| {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *v_max = v_max.max(*v);
                        lr * (*m / c1) / (v_max.sqrt() + eps)
                    })
                    .collect()
            }
            Rule::Combined {
                lambda,
                adaptive,
                momentum,
            } => {
                let a = adaptive.direction(grad)?;
                let m = momentum.direction(grad)?;
                blend_combined(t, *lambda, &a, &m)?.0
            }
        };
        self.step_count += 1;
        Ok(UpdateDirection(delta))
    }

    /// Advances the state and subtracts the resulting direction from `coeffs`.
    pub fn step(&mut self, coeffs: &mut [f64], grad: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coeffs.len(),
            });
        }
        let delta = self.direction(grad)?;
        for (c, d) in coeffs.iter_mut().zip(&delta.0) {
            *c -= d;
        }
        Ok(())
    }
}

// Beyond ~1e5 steps beta^t underflows to zero for any beta < 1 in use, so
// saturating the exponent does not change the correction.
fn bias_exponent(t: u64) -> i32 {
    t.min(i32::MAX as u64) as i32
}

/// Linear ramp from the adaptive direction `a` (at `t = 0`) to the momentum
/// direction `m` (at `t >= lambda`).
pub fn blend_combined(
    t: u64,
    lambda: f64,
    a: &UpdateDirection,
    m: &UpdateDirection,
) -> Result<UpdateDirection> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidHyperparameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if a.0.len() != m.0.len() {
        return Err(Error::DimensionMismatch {
            expected: a.0.len(),
            got: m.0.len(),
        });
    }
    let w = t as f64 / lambda;
    if w <= 0.0 {
        return Ok(a.clone());
    }
    if w >= 1.0 {
        return Ok(m.clone());
    }
    Ok(UpdateDirection(
        a.0.iter()
            .zip(&m.0)
            .map(|(x, y)| (1.0 - w) * x + w * y)
            .collect(),
    ))
}
