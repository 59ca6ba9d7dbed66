//! Time-series primitives: sample containers, differencing, min-max
//! normalization and tumbling-window segmentation.

use crate::error::{Error, Result};

/// An ordered run of finite samples together with its offset in the parent
/// stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start_index: usize,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_start(values, 0)
    }

    pub fn with_start(values: Vec<f64>, start_index: usize) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            values,
            start_index,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// One tumbling-window block of a stream, e.g. a single sensor snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroBatch {
    pub samples: TimeSeries,
    pub batch_index: usize,
}

impl MicroBatch {
    pub fn new(samples: TimeSeries, batch_index: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self {
            samples,
            batch_index,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }
}

/// Parameters of the affine map used by [`normalize`]. `degenerate` is set
/// when the input was constant, in which case every value maps to the midpoint
/// of the target range and inversion returns `observed_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationParams {
    pub observed_min: f64,
    pub observed_max: f64,
    pub target_lo: f64,
    pub target_hi: f64,
    pub degenerate: bool,
}

impl NormalizationParams {
    /// Fits the map to the extrema of `values`.
    pub fn fit(values: &[f64], target_lo: f64, target_hi: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok(Self {
            observed_min: min,
            observed_max: max,
            target_lo,
            target_hi,
            degenerate: !(min < max),
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.degenerate {
            return 0.5 * (self.target_lo + self.target_hi);
        }
        let unit = (x - self.observed_min) / (self.observed_max - self.observed_min);
        unit * (self.target_hi - self.target_lo) + self.target_lo
    }

    pub fn invert(&self, y: f64) -> f64 {
        if self.degenerate {
            return self.observed_min;
        }
        let unit = (y - self.target_lo) / (self.target_hi - self.target_lo);
        unit * (self.observed_max - self.observed_min) + self.observed_min
    }

    pub fn apply_series(&self, series: &TimeSeries) -> TimeSeries {
        TimeSeries {
            values: series.values.iter().map(|&x| self.apply(x)).collect(),
            start_index: series.start_index,
        }
    }
}

/// d-th order forward difference. Output length is `len - order`.
pub fn difference(series: &TimeSeries, order: usize) -> Result<TimeSeries> {
    if series.len() <= order {
        return Err(Error::InsufficientSamples {
            len: series.len(),
            order,
        });
    }
    let mut values = series.values.clone();
    difference_in_place(&mut values, order);
    Ok(TimeSeries {
        values,
        start_index: series.start_index + order,
    })
}

/// Applies `order` first differences to `values`, shrinking it by `order`.
pub(crate) fn difference_in_place(values: &mut Vec<f64>, order: usize) {
    for _ in 0..order {
        for i in 0..values.len().saturating_sub(1) {
            values[i] = values[i + 1] - values[i];
        }
        values.pop();
    }
}

/// Rebuilds `original` from `diffed` by repeated cumulative summation seeded
/// with the leading values of `original`, and reports whether the
/// reconstruction matches within 1e-12.
pub fn undifference_check(original: &TimeSeries, diffed: &TimeSeries, order: usize) -> bool {
    if original.len() < order || diffed.len() + order != original.len() {
        return false;
    }
    let mut current = diffed.values.clone();
    for level in (0..order).rev() {
        let mut head = original.values[..order].to_vec();
        difference_in_place(&mut head, level);
        let mut acc = head[0];
        let mut rebuilt = Vec::with_capacity(current.len() + 1);
        rebuilt.push(acc);
        for d in &current {
            acc += d;
            rebuilt.push(acc);
        }
        current = rebuilt;
    }
    current
        .iter()
        .zip(&original.values)
        .all(|(a, b)| (a - b).abs() <= 1e-12)
}

/// Affine min-max normalization onto `[target_lo, target_hi]`.
pub fn normalize(
    series: &TimeSeries,
    target_lo: f64,
    target_hi: f64,
) -> Result<(TimeSeries, NormalizationParams)> {
    let params = NormalizationParams::fit(&series.values, target_lo, target_hi)?;
    Ok((params.apply_series(series), params))
}

/// Tumbling-window segmentation result; `dropped` counts the trailing samples
/// that did not fill a whole window.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmented {
    pub batches: Vec<MicroBatch>,
    pub dropped: usize,
}

pub fn make_microbatches(series: &TimeSeries, batch_size: usize) -> Result<Segmented> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    let batches = series
        .values
        .chunks_exact(batch_size)
        .enumerate()
        .map(|(i, chunk)| MicroBatch {
            samples: TimeSeries {
                values: chunk.to_vec(),
                start_index: series.start_index + i * batch_size,
            },
            batch_index: i,
        })
        .collect();
    Ok(Segmented {
        batches,
        dropped: series.len() % batch_size,
    })
}
