//! Loading of real-world micro-batch files.
//!
//! Two plain-text layouts are understood:
//!
//! * [`BatchFileFormat::BearingSnapshot`]: one sample per line, columns
//!   separated by tabs or runs of spaces, no header (the layout of the NASA
//!   bearing snapshot files, one file per 10-minute capture).
//! * [`BatchFileFormat::CsvColumn`]: a header line `value` followed by one
//!   decimal number per line.
//!
//! Blank lines, trailing whitespace and CRLF line endings are tolerated. A
//! directory is read in lexicographic filename order, which for timestamped
//! snapshot names is chronological order.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{MicroBatch, NormalizationParams, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchFileFormat {
    BearingSnapshot,
    CsvColumn,
}

impl FromStr for BatchFileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bearing" | "bearing-snapshot" => Ok(BatchFileFormat::BearingSnapshot),
            "csv" | "csv-column" => Ok(BatchFileFormat::CsvColumn),
            other => Err(Error::Usage(format!(
                "unknown batch format '{other}', expected 'bearing' or 'csv'"
            ))),
        }
    }
}

fn parse_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn parse_number(path: &Path, row: usize, token: &str) -> Result<f64> {
    let value: f64 = token
        .parse()
        .map_err(|_| parse_error(path, row, format!("not a number: '{token}'")))?;
    if !value.is_finite() {
        return Err(parse_error(path, row, format!("non-finite value '{token}'")));
    }
    Ok(value)
}

/// Parses file contents; rows are numbered from 1 as lines in the file.
pub fn parse_batch_text(path: &Path, text: &str, format: BatchFileFormat, channel: usize) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, line)| (i + 1, line.trim()));

    if format == BatchFileFormat::CsvColumn {
        if channel != 0 {
            return Err(Error::ChannelOutOfRange {
                path: path.to_path_buf(),
                channel,
                columns: 1,
            });
        }
        match lines.find(|(_, line)| !line.is_empty()) {
            Some((_, "value")) => {}
            Some((row, other)) => {
                return Err(parse_error(path, row, format!("expected header 'value', found '{other}'")))
            }
            None => return Err(parse_error(path, 1, "missing header 'value'")),
        }
    }

    for (row, line) in lines {
        if line.is_empty() {
            continue;
        }
        match format {
            BatchFileFormat::CsvColumn => values.push(parse_number(path, row, line)?),
            BatchFileFormat::BearingSnapshot => {
                let mut columns = 0;
                let mut selected = None;
                for (i, token) in line.split_whitespace().enumerate() {
                    let v = parse_number(path, row, token)?;
                    if i == channel {
                        selected = Some(v);
                    }
                    columns += 1;
                }
                match selected {
                    Some(v) => values.push(v),
                    None => {
                        return Err(Error::ChannelOutOfRange {
                            path: path.to_path_buf(),
                            channel,
                            columns,
                        })
                    }
                }
            }
        }
    }
    if values.is_empty() {
        return Err(Error::EmptySelection(format!("{} contains no samples", path.display())));
    }
    Ok(values)
}

/// Reads one channel of one batch file. The returned batch has index 0.
pub fn parse_batch_file(path: &Path, format: BatchFileFormat, channel: usize) -> Result<MicroBatch> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let values = parse_batch_text(path, &text, format, channel)?;
    MicroBatch::new(TimeSeries::new(values)?, 0)
}

/// Regular, non-hidden files of `dir` in lexicographic filename order.
pub fn list_batch_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Loads up to `limit` batches from `dir`, numbered 0.. in filename order.
/// Files are parsed in parallel.
pub fn load_batch_dir(
    dir: &Path,
    format: BatchFileFormat,
    channel: usize,
    limit: Option<usize>,
) -> Result<Vec<MicroBatch>> {
    if limit == Some(0) {
        return Err(Error::EmptySelection("limit of 0 batches".into()));
    }
    let mut files = list_batch_files(dir)?;
    if files.is_empty() {
        return Err(Error::EmptySelection(format!("no batch files in {}", dir.display())));
    }
    if let Some(limit) = limit {
        files.truncate(limit);
    }
    files
        .par_iter()
        .enumerate()
        .map(|(index, path)| {
            let mut batch = parse_batch_file(path, format, channel)?;
            batch.batch_index = index;
            Ok(batch)
        })
        .collect()
}

/// Normalizes every batch with the extrema of the first one. Later batches
/// may fall outside the target range.
pub fn normalize_with_first(
    batches: &[MicroBatch],
    target_lo: f64,
    target_hi: f64,
) -> Result<(Vec<MicroBatch>, NormalizationParams)> {
    let first = batches
        .first()
        .ok_or_else(|| Error::EmptySelection("no batches to normalize".into()))?;
    let params = NormalizationParams::fit(first.values(), target_lo, target_hi)?;
    let normalized = batches
        .iter()
        .map(|b| MicroBatch {
            samples: params.apply_series(&b.samples),
            batch_index: b.batch_index,
        })
        .collect();
    Ok((normalized, params))
}

/// Reads a single-series CSV in the [`BatchFileFormat::CsvColumn`] layout.
pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    Ok(parse_batch_file(path, BatchFileFormat::CsvColumn, 0)?.samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PathBuf {
        PathBuf::from("mem")
    }

    #[test]
    fn bearing_rows_select_channel() {
        let text = "-0.049\t-0.071\t-0.132\t-0.010\n-0.042  -0.073 -0.007\t-0.105\r\n\n0.015\t0.000\t0.007\t0.000  \n";
        let v = parse_batch_text(&p(), text, BatchFileFormat::BearingSnapshot, 0).unwrap();
        assert_eq!(v, vec![-0.049, -0.042, 0.015]);
        let v = parse_batch_text(&p(), text, BatchFileFormat::BearingSnapshot, 3).unwrap();
        assert_eq!(v, vec![-0.010, -0.105, 0.0]);
        assert!(matches!(
            parse_batch_text(&p(), text, BatchFileFormat::BearingSnapshot, 4),
            Err(Error::ChannelOutOfRange { columns: 4, .. })
        ));
    }

    #[test]
    fn csv_column() {
        let v = parse_batch_text(&p(), "value\r\n0.1\r\n0.2\r\n", BatchFileFormat::CsvColumn, 0).unwrap();
        assert_eq!(v, vec![0.1, 0.2]);
        assert!(parse_batch_text(&p(), "x\n0.1\n", BatchFileFormat::CsvColumn, 0).is_err());
        assert!(parse_batch_text(&p(), "value\n0.1\n", BatchFileFormat::CsvColumn, 1).is_err());
        assert!(parse_batch_text(&p(), "value\n", BatchFileFormat::CsvColumn, 0).is_err());
    }

    #[test]
    fn garbage_row_is_named() {
        let mut text: String = (0..6).map(|i| format!("{i}.0 1.0\n")).collect();
        text.push_str("1.0 oops\n");
        let err = parse_batch_text(&p(), &text, BatchFileFormat::BearingSnapshot, 0).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 7, .. }));
        assert!(err.to_string().contains("row 7"));
    }

    #[test]
    fn first_batch_normalization_is_frozen() {
        let a = MicroBatch::new(TimeSeries::new(vec![0.0, 2.0]).unwrap(), 0).unwrap();
        let b = MicroBatch::new(TimeSeries::new(vec![4.0, 1.0]).unwrap(), 1).unwrap();
        let (out, params) = normalize_with_first(&[a, b], -1.0, 1.0).unwrap();
        assert_eq!(params.observed_max, 2.0);
        assert_eq!(out[0].values(), &[-1.0, 1.0]);
        assert_eq!(out[1].values(), &[3.0, 0.0]);
    }

    #[test]
    fn format_names() {
        assert_eq!("bearing".parse::<BatchFileFormat>().unwrap(), BatchFileFormat::BearingSnapshot);
        assert_eq!("CSV".parse::<BatchFileFormat>().unwrap(), BatchFileFormat::CsvColumn);
        assert!("parquet".parse::<BatchFileFormat>().is_err());
    }
}
