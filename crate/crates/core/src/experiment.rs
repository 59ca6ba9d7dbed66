//! Experiment harness: per-sample streaming runs, per-batch runs scored by
//! mean absolute residual, repeated seeded trials, learning-rate grid search
//! and the lambda sweep of the combined optimizer.
//!
//! Trials differ only in the seed used to initialize the model coefficients;
//! every trial sees the same data. Trials and sweep configurations run in
//! parallel, and results are always assembled in input order.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ArimaModel, ModelConfig, StepOutcome};
use crate::optimizer::{Hyperparams, OptimizerKind, OptimizerState};
use crate::series::{MicroBatch, TimeSeries};

/// Fraction of a curve, counted from its end, that defines the final residual.
pub const TAIL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub hyper: Hyperparams,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            hyper: Hyperparams::with_learning_rate(learning_rate),
        }
    }

    fn build(&self, dim: usize) -> Result<OptimizerState> {
        OptimizerState::new(self.kind, self.hyper, dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Model shape and initialization range; its `seed` is replaced by each
    /// trial seed.
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub trial_seeds: Vec<u64>,
}

impl RunSpec {
    pub fn new(model: ModelConfig, optimizer: OptimizerConfig, trial_seeds: Vec<u64>) -> Self {
        Self {
            model,
            optimizer,
            trial_seeds,
        }
    }

    /// Seeds `base, base + 1, ..., base + trials - 1`.
    pub fn seeds(base: u64, trials: usize) -> Vec<u64> {
        (0..trials as u64).map(|i| base.wrapping_add(i)).collect()
    }

    pub fn trials(&self) -> usize {
        self.trial_seeds.len()
    }

    pub fn with_optimizer(&self, optimizer: OptimizerConfig) -> Self {
        Self {
            optimizer,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trial_seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        self.model.validate()
    }

    fn trial_model(&self, trial: usize) -> Result<ArimaModel> {
        ArimaModel::new(ModelConfig {
            seed: self.trial_seeds[trial],
            ..self.model
        })
    }
}

#[derive(Debug, Clone)]
pub enum DataSource {
    /// One continuous stream, scored per sample.
    Series(TimeSeries),
    /// Consecutive micro-batches, scored per batch.
    Batches(Vec<MicroBatch>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    PerSample,
    PerBatch,
}

/// Residual curve averaged over trials. For per-sample curves `indices` are
/// positions in the stream; for per-batch curves they are batch indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCurve {
    pub granularity: Granularity,
    pub indices: Vec<usize>,
    pub mean: Vec<f64>,
    pub per_trial: Vec<Vec<f64>>,
}

impl ResidualCurve {
    fn from_trials(granularity: Granularity, indices: Vec<usize>, per_trial: Vec<Vec<f64>>) -> Self {
        let k = per_trial.len() as f64;
        let mut mean = vec![0.0; indices.len()];
        for trial in &per_trial {
            for (m, r) in mean.iter_mut().zip(trial) {
                *m += r;
            }
        }
        for m in &mut mean {
            *m /= k;
        }
        Self {
            granularity,
            indices,
            mean,
            per_trial,
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Mean of the averaged curve over the last [`TAIL_FRACTION`] of its
    /// points.
    pub fn tail_mean(&self) -> f64 {
        let n = self.mean.len();
        let k = ((n as f64 * TAIL_FRACTION).ceil() as usize).clamp(1, n.max(1));
        mean(&self.mean[n.saturating_sub(k)..])
    }

    /// Mean over points whose index lies in `range`.
    pub fn window_mean(&self, range: Range<usize>) -> f64 {
        let selected: Vec<f64> = self
            .indices
            .iter()
            .zip(&self.mean)
            .filter(|(i, _)| range.contains(i))
            .map(|(_, r)| *r)
            .collect();
        mean(&selected)
    }

    /// Writes `t,r_mean,r_trial_1,...` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t,r_mean")?;
        for k in 1..=self.per_trial.len() {
            write!(out, ",r_trial_{k}")?;
        }
        writeln!(out)?;
        for (row, (t, m)) in self.indices.iter().zip(&self.mean).enumerate() {
            write!(out, "{t},{m}")?;
            for trial in &self.per_trial {
                write!(out, ",{}", trial[row])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn diverged(trial: usize, index: usize) -> Error {
    Error::Diverged { trial, index }
}

fn stream_trial(spec: &RunSpec, trial: usize, series: &TimeSeries) -> Result<Vec<f64>> {
    let mut model = spec.trial_model(trial)?;
    let mut optimizer = spec.optimizer.build(spec.model.mk)?;
    let mut residuals = Vec::with_capacity(series.len().saturating_sub(spec.model.warm_up()));
    for (index, &x) in series.values().iter().enumerate() {
        match model.learn_step(&mut optimizer, x)? {
            StepOutcome::WarmUp => {}
            StepOutcome::Predicted(p) => {
                if !p.residual.is_finite() {
                    return Err(diverged(trial, index));
                }
                residuals.push(p.residual.abs());
            }
        }
    }
    Ok(residuals)
}

/// One learn step per sample; the curve holds `|residual|` for every
/// predicted sample, averaged over trials.
pub fn run_stream(spec: &RunSpec, series: &TimeSeries) -> Result<ResidualCurve> {
    spec.validate()?;
    let warm_up = spec.model.warm_up();
    if series.len() <= warm_up {
        return Err(Error::InsufficientSamples {
            len: series.len(),
            order: warm_up,
        });
    }
    let per_trial = (0..spec.trials())
        .into_par_iter()
        .map(|trial| stream_trial(spec, trial, series))
        .collect::<Result<Vec<_>>>()?;
    let indices = (warm_up..series.len()).map(|i| series.start_index() + i).collect();
    Ok(ResidualCurve::from_trials(
        Granularity::PerSample,
        indices,
        per_trial,
    ))
}

/// Mean absolute residual of one micro-batch, skipping the first `mk + d`
/// positions. `predictions` and `actuals` cover the whole batch; predictions
/// at skipped positions are ignored.
pub fn batch_residual(predictions: &[f64], actuals: &[f64], mk: usize, d: usize) -> Result<f64> {
    if predictions.len() != actuals.len() {
        return Err(Error::DimensionMismatch {
            expected: actuals.len(),
            got: predictions.len(),
        });
    }
    let n = actuals.len();
    let warm_up = mk + d;
    if n <= warm_up {
        return Err(Error::BatchTooShort { n, warm_up });
    }
    let total: f64 = predictions[warm_up..]
        .iter()
        .zip(&actuals[warm_up..])
        .map(|(p, x)| (p - x).abs())
        .sum();
    Ok(total / (n - warm_up) as f64)
}

/// Per-batch detail of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub batch_index: usize,
    /// Forecast for each position; `NaN` where the model was still warming
    /// up.
    pub predictions: Vec<f64>,
    /// `|residual|` at each scored position (index `mk + d` onward).
    pub scored_abs_residuals: Vec<f64>,
    pub residual: f64,
}

/// Runs one trial over the batches, keeping model and optimizer state across
/// batch boundaries.
pub fn batched_trial(spec: &RunSpec, trial: usize, batches: &[MicroBatch]) -> Result<Vec<BatchRecord>> {
    let warm_up = spec.model.warm_up();
    let mut model = spec.trial_model(trial)?;
    let mut optimizer = spec.optimizer.build(spec.model.mk)?;
    let mut records = Vec::with_capacity(batches.len());
    let mut stream_index = 0;
    for batch in batches {
        let n = batch.len();
        if n <= warm_up {
            return Err(Error::BatchTooShort { n, warm_up });
        }
        let mut predictions = Vec::with_capacity(n);
        let mut scored = Vec::with_capacity(n - warm_up);
        for (i, &x) in batch.values().iter().enumerate() {
            let outcome = model.learn_step(&mut optimizer, x)?;
            let value = match outcome {
                StepOutcome::WarmUp => f64::NAN,
                StepOutcome::Predicted(p) => {
                    if !p.residual.is_finite() {
                        return Err(diverged(trial, stream_index));
                    }
                    p.value
                }
            };
            if i >= warm_up {
                scored.push((value - x).abs());
            }
            predictions.push(value);
            stream_index += 1;
        }
        let residual = batch_residual(&predictions, batch.values(), spec.model.mk, spec.model.d)?;
        records.push(BatchRecord {
            batch_index: batch.batch_index,
            predictions,
            scored_abs_residuals: scored,
            residual,
        });
    }
    Ok(records)
}

/// One learn step per sample across all batches; emits the batch residual
/// per batch, averaged over trials.
pub fn run_batched(spec: &RunSpec, batches: &[MicroBatch]) -> Result<ResidualCurve> {
    spec.validate()?;
    if batches.is_empty() {
        return Err(Error::EmptySelection("no batches to run".into()));
    }
    let per_trial = (0..spec.trials())
        .into_par_iter()
        .map(|trial| {
            batched_trial(spec, trial, batches)
                .map(|records| records.into_iter().map(|r| r.residual).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let indices = batches.iter().map(|b| b.batch_index).collect();
    Ok(ResidualCurve::from_trials(
        Granularity::PerBatch,
        indices,
        per_trial,
    ))
}

pub fn run(spec: &RunSpec, data: &DataSource) -> Result<ResidualCurve> {
    match data {
        DataSource::Series(series) => run_stream(spec, series),
        DataSource::Batches(batches) => run_batched(spec, batches),
    }
}

/// Outcome of one configuration inside a grid search, sweep or comparison.
#[derive(Debug, Clone)]
pub struct Labeled {
    pub label: String,
    pub optimizer: OptimizerConfig,
    /// `None` when the run diverged.
    pub curve: Option<ResidualCurve>,
}

impl Labeled {
    pub fn diverged(&self) -> bool {
        self.curve.is_none()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.curve.as_ref().map(ResidualCurve::tail_mean)
    }
}

fn run_labeled(spec: &RunSpec, data: &DataSource, configs: Vec<(String, OptimizerConfig)>) -> Result<Vec<Labeled>> {
    configs
        .into_par_iter()
        .map(|(label, optimizer)| {
            let curve = match run(&spec.with_optimizer(optimizer), data) {
                Ok(curve) => Some(curve),
                Err(Error::Diverged { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(Labeled {
                label,
                optimizer,
                curve,
            })
        })
        .collect()
}

/// Runs each optimizer kind with the spec's hyperparameters on the same data
/// and seeds. Diverged runs are reported, not propagated.
pub fn compare(spec: &RunSpec, data: &DataSource, kinds: &[OptimizerKind]) -> Result<Vec<Labeled>> {
    let configs = kinds
        .iter()
        .map(|&kind| {
            (
                kind.name().to_string(),
                OptimizerConfig {
                    kind,
                    hyper: spec.optimizer.hyper,
                },
            )
        })
        .collect();
    run_labeled(spec, data, configs)
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best_rate: f64,
    pub entries: Vec<Labeled>,
}

/// Runs the spec's optimizer at each learning rate and returns the one with
/// the lowest final residual; ties go to the smaller rate.
pub fn grid_search(spec: &RunSpec, data: &DataSource, rates: &[f64]) -> Result<GridSearchResult> {
    if rates.is_empty() {
        return Err(Error::Usage("empty learning-rate grid".into()));
    }
    let configs = rates
        .iter()
        .map(|&lr| {
            let mut optimizer = spec.optimizer;
            optimizer.hyper.learning_rate = lr;
            (format!("lr={lr}"), optimizer)
        })
        .collect();
    let entries = run_labeled(spec, data, configs)?;
    let best_rate = entries
        .iter()
        .filter_map(|e| {
            e.final_residual()
                .filter(|r| r.is_finite())
                .map(|r| (r, e.optimizer.hyper.learning_rate))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .map(|(_, lr)| lr)
        .ok_or(Error::NoStableRate)?;
    Ok(GridSearchResult { best_rate, entries })
}

/// Ramp lengths used for the sensitivity sweep (1% to 100% of a 10000-step
/// run).
pub const LAMBDA_GRID: [f64; 7] = [100.0, 500.0, 1000.0, 2000.0, 3000.0, 5000.0, 10000.0];

/// Baselines reported alongside every sweep.
pub const SWEEP_BASELINES: [OptimizerKind; 3] =
    [OptimizerKind::AmsGrad, OptimizerKind::Basic, OptimizerKind::Momentum];

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<Labeled>,
}

impl SweepResult {
    pub fn get(&self, label: &str) -> Option<&Labeled> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Writes `label,final_residual,diverged` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "label,final_residual,diverged")?;
        for e in &self.entries {
            match e.final_residual() {
                Some(r) => writeln!(out, "{},{},false", e.label, r)?,
                None => writeln!(out, "{},,true", e.label)?,
            }
        }
        Ok(())
    }
}

pub fn lambda_label(lambda: f64) -> String {
    format!("combined_lambda_{lambda}")
}

/// One Combined run per ramp length plus AMSGrad, Basic and Momentum
/// baselines, all on the same data, seeds and learning rate.
pub fn sweep_lambda(spec: &RunSpec, data: &DataSource, lambdas: &[f64]) -> Result<SweepResult> {
    if !matches!(spec.optimizer.kind, OptimizerKind::Combined { .. }) {
        return Err(Error::Usage("lambda sweep requires the combined optimizer".into()));
    }
    if lambdas.is_empty() {
        return Err(Error::Usage("empty lambda grid".into()));
    }
    let hyper = spec.optimizer.hyper;
    let mut configs: Vec<(String, OptimizerConfig)> = lambdas
        .iter()
        .map(|&lambda| {
            (
                lambda_label(lambda),
                OptimizerConfig {
                    kind: OptimizerKind::Combined { lambda },
                    hyper,
                },
            )
        })
        .collect();
    configs.extend(
        SWEEP_BASELINES
            .iter()
            .map(|&kind| (kind.name().to_string(), OptimizerConfig { kind, hyper })),
    );
    Ok(SweepResult {
        entries: run_labeled(spec, data, configs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::synth::{generate, GeneratorSpec};

    fn noise_series(n: usize, seed: u64) -> TimeSeries {
        let mut rng = SeededRng::new(seed);
        TimeSeries::new((0..n).map(|i| (i as f64 * 0.2).sin() + 0.1 * rng.standard_normal()).collect())
            .unwrap()
    }

    fn spec(kind: OptimizerKind, lr: f64, mk: usize, d: usize, seeds: Vec<u64>) -> RunSpec {
        RunSpec::new(ModelConfig::new(mk, d, 0), OptimizerConfig::new(kind, lr), seeds)
    }

    #[test]
    fn batch_residual_examples() {
        let x = [0.3, -0.2, 0.5, 0.1, 0.9];
        assert_eq!(batch_residual(&x, &x, 2, 0).unwrap(), 0.0);

        let actual = [0.0, 0.0, 1.0, 1.0, 1.0];
        let pred = [9.0, 9.0, 1.1, 0.8, 1.3];
        assert!((batch_residual(&pred, &actual, 1, 1).unwrap() - 0.2).abs() < 1e-12);

        let c = [-0.7; 6];
        assert!((batch_residual(&[0.0; 6], &c, 3, 0).unwrap() - 0.7).abs() < 1e-15);

        assert!(matches!(
            batch_residual(&[0.0; 3], &[0.0; 3], 2, 1),
            Err(Error::BatchTooShort { n: 3, warm_up: 3 })
        ));
    }

    #[test]
    fn identical_seeds_average_to_single_curve() {
        let s = noise_series(500, 1);
        let one = run_stream(&spec(OptimizerKind::Adam, 0.01, 4, 0, vec![7]), &s).unwrap();
        let two = run_stream(&spec(OptimizerKind::Adam, 0.01, 4, 0, vec![7, 7]), &s).unwrap();
        assert_eq!(one.mean, two.mean);
        assert_eq!(one.indices, two.indices);
        assert_eq!(one.indices.first(), Some(&4));
        assert_eq!(one.len(), 496);
    }

    #[test]
    fn stream_converges_on_setting_one() {
        let s = generate(&GeneratorSpec::preset(1, 0).unwrap()).unwrap();
        let curve = run_stream(&spec(OptimizerKind::Basic, 0.05, 5, 0, vec![1]), &s).unwrap();
        assert!(curve.mean.iter().all(|r| r.is_finite()));
        let head = curve.window_mean(100..1100);
        let tail = curve.window_mean(9000..10_000);
        assert!(tail < head, "head {head} tail {tail}");
    }

    #[test]
    fn stream_too_short() {
        let s = noise_series(5, 0);
        assert!(run_stream(&spec(OptimizerKind::Basic, 0.1, 5, 0, vec![0]), &s).is_err());
        assert!(run_stream(&spec(OptimizerKind::Basic, 0.1, 2, 0, vec![]), &s).is_err());
    }

    #[test]
    fn frozen_model_scores_repeated_batches_identically() {
        let s = noise_series(60, 3);
        let batch = MicroBatch::new(s, 0).unwrap();
        let mut second = batch.clone();
        second.batch_index = 1;
        let curve = run_batched(
            &spec(OptimizerKind::Momentum, 0.0, 6, 1, vec![1, 2]),
            &[batch, second],
        )
        .unwrap();
        assert_eq!(curve.granularity, Granularity::PerBatch);
        assert_eq!(curve.indices, vec![0, 1]);
        assert_eq!(curve.mean[0], curve.mean[1]);
    }

    #[test]
    fn batch_records_agree_with_batch_residual() {
        let s = noise_series(300, 9);
        let batches = crate::series::make_microbatches(&s, 50).unwrap().batches;
        let sp = spec(OptimizerKind::AmsGrad, 0.02, 5, 1, vec![4]);
        let records = batched_trial(&sp, 0, &batches).unwrap();
        assert_eq!(records.len(), 6);
        assert!(records[0].predictions[..6].iter().all(|p| p.is_nan()));
        for r in &records {
            assert_eq!(r.scored_abs_residuals.len(), 44);
            let m = r.scored_abs_residuals.iter().sum::<f64>() / 44.0;
            assert!((m - r.residual).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let s = generate(&GeneratorSpec::preset(1, 0).unwrap()).unwrap();
        let err = run_stream(&spec(OptimizerKind::Basic, 1e9, 5, 0, vec![0]), &s).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn grid_search_rules() {
        let s = DataSource::Series(generate(&GeneratorSpec::preset(1, 0).unwrap()).unwrap());
        let sp = spec(OptimizerKind::Basic, 0.05, 5, 0, vec![0, 1]);
        assert_eq!(grid_search(&sp, &s, &[0.03]).unwrap().best_rate, 0.03);

        let res = grid_search(&sp, &s, &[1e9, 0.05]).unwrap();
        assert_eq!(res.best_rate, 0.05);
        assert!(res.entries[0].diverged());

        // duplicate rates tie exactly
        let res = grid_search(&sp, &s, &[0.05, 0.05]).unwrap();
        assert_eq!(res.best_rate, 0.05);

        assert!(matches!(grid_search(&sp, &s, &[1e9]), Err(Error::NoStableRate)));
        assert!(grid_search(&sp, &s, &[]).is_err());
    }

    #[test]
    fn grid_search_tie_prefers_smaller_rate() {
        // A constant-zero series gives zero residual for every rate once the
        // history is zero, whatever the coefficients.
        let s = DataSource::Series(TimeSeries::new(vec![0.0; 50]).unwrap());
        let sp = spec(OptimizerKind::Basic, 0.05, 3, 0, vec![0]);
        assert_eq!(grid_search(&sp, &s, &[0.2, 0.1, 0.3]).unwrap().best_rate, 0.1);
    }

    #[test]
    fn sweep_covers_grid_and_baselines() {
        let s = DataSource::Series(noise_series(400, 5));
        let sp = spec(OptimizerKind::Combined { lambda: 10.0 }, 0.01, 3, 0, vec![0, 1]);
        let res = sweep_lambda(&sp, &s, &[10.0, 396.0]).unwrap();
        let labels: Vec<&str> = res.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(
            labels,
            vec!["combined_lambda_10", "combined_lambda_396", "amsgrad", "basic", "momentum"]
        );
        assert!(res.entries.iter().all(|e| e.final_residual().unwrap().is_finite()));

        let mut csv = Vec::new();
        res.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("label,final_residual,diverged\ncombined_lambda_10,"));

        let not_combined = spec(OptimizerKind::Adam, 0.01, 3, 0, vec![0]);
        assert!(sweep_lambda(&not_combined, &s, &[10.0]).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let curve = ResidualCurve::from_trials(
            Granularity::PerBatch,
            vec![0, 1],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        );
        let mut out = Vec::new();
        curve.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "t,r_mean,r_trial_1,r_trial_2\n0,2,1,3\n1,3,2,4\n"
        );
        assert_eq!(curve.tail_mean(), 3.0);
    }
}
