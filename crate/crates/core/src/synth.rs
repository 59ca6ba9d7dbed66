//! Seeded ARMA generator, including a mid-stream switch of coefficients to
//! simulate concept shift.
//!
//! ```text
//! x_t = Σ_j alpha_j x_{t-1-j} + e_t + Σ_j beta_j e_{t-1-j},   e_t ~ N(0, noise_std²)
//! ```
//!
//! `burn_in` samples are generated first and discarded. Noise comes from
//! [`SeededRng::standard_normal`], one draw per generated sample including the
//! burn-in, so the documented SplitMix64 + Box-Muller stream fully determines
//! the output.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::series::{normalize, TimeSeries};

pub const DEFAULT_NOISE_STD: f64 = 0.3;
pub const DEFAULT_BURN_IN: usize = 500;
pub const PRESET_LENGTH: usize = 10_000;
pub const PRESET_SHIFT_AT: usize = 5_000;

/// Any |x_t| above this before normalization marks the realization explosive.
pub const EXPLOSION_LIMIT: f64 = 1e6;

const SETTING_ALPHA: [f64; 5] = [0.9, -0.9, 0.9, -0.4, -0.1];
const SETTING_BETA: [f64; 2] = [0.5, 0.1];
const SHIFTED_ALPHA: [f64; 5] = [0.7, -0.7, 0.7, -0.6, -0.3];
const SHIFTED_BETA: [f64; 2] = [0.2, 0.4];

#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    /// First recorded index generated with the new coefficients.
    pub at_index: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub noise_std: f64,
    /// Recorded samples, not counting the burn-in.
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub shift: Option<Shift>,
}

impl GeneratorSpec {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, length: usize, seed: u64) -> Self {
        Self {
            alpha,
            beta,
            noise_std: DEFAULT_NOISE_STD,
            length,
            burn_in: DEFAULT_BURN_IN,
            seed,
            shift: None,
        }
    }

    /// The three synthetic settings: 1 is pure AR(5), 2 adds MA(2) terms and
    /// 3 is setting 2 switching to new coefficients at sample 5000.
    pub fn preset(setting: u8, seed: u64) -> Result<Self> {
        let mut spec = GeneratorSpec::new(SETTING_ALPHA.to_vec(), vec![], PRESET_LENGTH, seed);
        match setting {
            1 => {}
            2 => spec.beta = SETTING_BETA.to_vec(),
            3 => {
                spec.beta = SETTING_BETA.to_vec();
                spec.shift = Some(Shift {
                    at_index: PRESET_SHIFT_AT,
                    alpha: SHIFTED_ALPHA.to_vec(),
                    beta: SHIFTED_BETA.to_vec(),
                });
            }
            other => {
                return Err(Error::InvalidGeneratorSpec(format!(
                    "unknown preset {other}, expected 1, 2 or 3"
                )))
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut order = self.alpha.len().max(self.beta.len());
        if let Some(shift) = &self.shift {
            order = order.max(shift.alpha.len()).max(shift.beta.len());
            if shift.at_index >= self.length {
                return Err(Error::InvalidGeneratorSpec(format!(
                    "shift index {} not below length {}",
                    shift.at_index, self.length
                )));
            }
        }
        if self.length <= order + self.burn_in {
            return Err(Error::InvalidGeneratorSpec(format!(
                "length {} must exceed max order {} plus burn-in {}",
                self.length, order, self.burn_in
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidGeneratorSpec(format!(
                "noise_std must be finite and non-negative, got {}",
                self.noise_std
            )));
        }
        let coeffs = self
            .alpha
            .iter()
            .chain(&self.beta)
            .chain(self.shift.iter().flat_map(|s| s.alpha.iter().chain(&s.beta)));
        if coeffs.clone().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeneratorSpec("non-finite coefficient".into()));
        }
        Ok(())
    }
}

/// Runs the recurrence and returns the recorded samples before
/// normalization.
pub fn generate_raw(spec: &GeneratorSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let total = spec.burn_in + spec.length;
    let switch_at = spec.shift.as_ref().map(|s| spec.burn_in + s.at_index);
    let mut rng = SeededRng::new(spec.seed);
    let mut x = Vec::with_capacity(total);
    let mut noise = Vec::with_capacity(total);

    for t in 0..total {
        let (alpha, beta) = match (&spec.shift, switch_at) {
            (Some(shift), Some(at)) if t >= at => (&shift.alpha, &shift.beta),
            _ => (&spec.alpha, &spec.beta),
        };
        let e = spec.noise_std * rng.standard_normal();
        let ar: f64 = alpha
            .iter()
            .enumerate()
            .filter(|(j, _)| *j < t)
            .map(|(j, a)| a * x[t - 1 - j])
            .sum();
        let ma: f64 = beta
            .iter()
            .enumerate()
            .filter(|(j, _)| *j < t)
            .map(|(j, b)| b * noise[t - 1 - j])
            .sum();
        let value = ar + e + ma;
        if !(value.abs() <= EXPLOSION_LIMIT) {
            return Err(Error::NonStationary {
                step: t,
                limit: EXPLOSION_LIMIT,
            });
        }
        x.push(value);
        noise.push(e);
    }
    TimeSeries::new(x.split_off(spec.burn_in))
}

/// Generates the series and normalizes it onto `[-1, 1]` over its full
/// length.
pub fn generate(spec: &GeneratorSpec) -> Result<TimeSeries> {
    let raw = generate_raw(spec)?;
    Ok(normalize(&raw, -1.0, 1.0)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag1_autocorrelation(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
        let cov: f64 = v.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        cov / var
    }

    #[test]
    fn white_noise_is_uncorrelated() {
        let mut spec = GeneratorSpec::new(vec![], vec![], 10_000, 5);
        spec.noise_std = 1.0;
        let s = generate(&spec).unwrap();
        assert_eq!(s.len(), 10_000);
        assert!(lag1_autocorrelation(s.values()).abs() < 0.05);
    }

    #[test]
    fn presets_match_published_parameters() {
        let p1 = GeneratorSpec::preset(1, 0).unwrap();
        assert_eq!(p1.alpha, vec![0.9, -0.9, 0.9, -0.4, -0.1]);
        assert!(p1.beta.is_empty());
        assert!(p1.shift.is_none());
        assert_eq!(p1.length, 10_000);

        let p2 = GeneratorSpec::preset(2, 0).unwrap();
        assert_eq!(p2.alpha, p1.alpha);
        assert_eq!(p2.beta, vec![0.5, 0.1]);

        let p3 = GeneratorSpec::preset(3, 0).unwrap();
        let shift = p3.shift.unwrap();
        assert_eq!(shift.at_index, 5000);
        assert_eq!(shift.alpha, vec![0.7, -0.7, 0.7, -0.6, -0.3]);
        assert_eq!(shift.beta, vec![0.2, 0.4]);
        assert_eq!(p3.beta, p2.beta);

        assert!(GeneratorSpec::preset(4, 0).is_err());
    }

    #[test]
    fn setting_one_is_centered_and_bounded() {
        let s = generate(&GeneratorSpec::preset(1, 1).unwrap()).unwrap();
        assert_eq!(s.len(), 10_000);
        assert!(s.mean().abs() < 0.1, "mean {}", s.mean());
        assert!(s.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = GeneratorSpec::preset(2, 99).unwrap();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GeneratorSpec::preset(2, 100).unwrap();
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn shift_keeps_prefix_of_unshifted_series() {
        for seed in [0, 17, 12345] {
            let before = generate_raw(&GeneratorSpec::preset(2, seed).unwrap()).unwrap();
            let after = generate_raw(&GeneratorSpec::preset(3, seed).unwrap()).unwrap();
            assert_eq!(before.values()[..5000], after.values()[..5000]);
            assert_ne!(before.values()[5000..], after.values()[5000..]);
        }
    }

    #[test]
    fn explosive_process_is_rejected() {
        let spec = GeneratorSpec::new(vec![1.5], vec![], 2000, 1);
        assert!(matches!(
            generate(&spec),
            Err(Error::NonStationary { .. })
        ));
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&GeneratorSpec::new(vec![0.5], vec![], 100, 1)).is_err());
        let mut spec = GeneratorSpec::preset(3, 0).unwrap();
        spec.shift.as_mut().unwrap().at_index = 10_000;
        assert!(generate(&spec).is_err());
        let mut spec = GeneratorSpec::preset(1, 0).unwrap();
        spec.noise_std = -1.0;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn presets_are_finite_and_normalized() {
        for setting in 1..=3 {
            let s = generate(&GeneratorSpec::preset(setting, 3).unwrap()).unwrap();
            assert!(s.values().iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)));
        }
    }
}
