//! Chronological train/validation/test partitioning.
//!
//! Splits never shuffle: the models learn temporal structure, so each
//! partition is a set of contiguous runs in time order. Three modes:
//! index fractions, explicit boundary timestamps, and a month-interleaved
//! mode that alternates whole calendar months between validation and test
//! so both see every season of a multi-year series.

use chrono::{Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// How to carve one series into partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Contiguous prefix/middle/suffix by row count. The train and val
    /// lengths are floored, test takes the remainder; the fractions must
    /// sum to one.
    Fractions { train: f64, val: f64, test: f64 },
    /// Split at explicit timestamps: rows before `val_start` train, rows
    /// in `[val_start, test_start)` validate, the rest test.
    Boundaries { val_start: i64, test_start: i64 },
    /// A contiguous training prefix of the given fraction; the remaining
    /// rows go to validation in odd-numbered calendar months (UTC) and to
    /// test in even-numbered ones.
    InterleaveMonths { train_fraction: f64 },
}

/// One series split into a training run and interleaved validation and
/// test runs, each internally contiguous.
#[derive(Debug, Clone)]
pub struct SplitSeries {
    pub train: TimeSeries,
    pub val: Vec<TimeSeries>,
    pub test: Vec<TimeSeries>,
}

impl SplitSeries {
    pub fn val_len(&self) -> usize {
        self.val.iter().map(|s| s.len()).sum()
    }

    pub fn test_len(&self) -> usize {
        self.test.iter().map(|s| s.len()).sum()
    }
}

fn month_is_odd(timestamp: i64) -> Result<bool> {
    let dt = Utc
        .timestamp_opt(timestamp, 0)
        .single()
        .ok_or_else(|| Error::InvalidConfig(format!("timestamp {timestamp} out of range")))?;
    Ok(dt.month() % 2 == 1)
}

fn check_len(partition: &'static str, actual: usize, needed: usize) -> Result<()> {
    if actual < needed {
        return Err(Error::PartitionTooSmall { partition, actual, needed });
    }
    Ok(())
}

fn fraction_ok(f: f64) -> bool {
    f.is_finite() && (0.0..=1.0).contains(&f)
}

/// Split `series` per `spec`. Every non-empty partition run must hold at
/// least `min_len` rows — callers pass the row count one model window
/// needs, so a partition that cannot host a single window fails loudly
/// instead of silently contributing nothing.
pub fn split_series(
    series: &TimeSeries,
    spec: &SplitSpec,
    min_len: usize,
) -> Result<SplitSeries> {
    let n = series.len();
    match spec {
        SplitSpec::Fractions { train, val, test } => {
            if !fraction_ok(*train) || !fraction_ok(*val) || !fraction_ok(*test) {
                return Err(Error::InvalidConfig(format!(
                    "split fractions must lie in [0, 1], got ({train}, {val}, {test})"
                )));
            }
            if ((train + val + test) - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "split fractions must sum to 1, got {}",
                    train + val + test
                )));
            }
            let n_train = (train * n as f64).floor() as usize;
            let n_val = (val * n as f64).floor() as usize;
            let n_test = n - n_train - n_val;
            check_len("train", n_train, min_len.max(1))?;
            if n_val > 0 || *val > 0.0 {
                check_len("val", n_val, min_len.max(1))?;
            }
            check_len("test", n_test, min_len.max(1))?;
            let val_runs = if n_val > 0 {
                vec![series.slice(n_train..n_train + n_val)?]
            } else {
                Vec::new()
            };
            Ok(SplitSeries {
                train: series.slice(0..n_train)?,
                val: val_runs,
                test: vec![series.slice(n_train + n_val..n)?],
            })
        }
        SplitSpec::Boundaries { val_start, test_start } => {
            if val_start > test_start {
                return Err(Error::InvalidConfig(format!(
                    "val_start {val_start} is after test_start {test_start}"
                )));
            }
            let ts = series.timestamps();
            let idx_val = ts.partition_point(|&t| t < *val_start);
            let idx_test = ts.partition_point(|&t| t < *test_start);
            check_len("train", idx_val, min_len.max(1))?;
            check_len("test", n - idx_test, min_len.max(1))?;
            let val_runs = if idx_val < idx_test {
                check_len("val", idx_test - idx_val, min_len.max(1))?;
                vec![series.slice(idx_val..idx_test)?]
            } else {
                Vec::new()
            };
            Ok(SplitSeries {
                train: series.slice(0..idx_val)?,
                val: val_runs,
                test: vec![series.slice(idx_test..n)?],
            })
        }
        SplitSpec::InterleaveMonths { train_fraction } => {
            if !train_fraction.is_finite() || !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "train_fraction must lie strictly inside (0, 1), got {train_fraction}"
                )));
            }
            let n_train = (train_fraction * n as f64).floor() as usize;
            check_len("train", n_train, min_len.max(1))?;
            let mut val_runs = Vec::new();
            let mut test_runs = Vec::new();
            let mut start = n_train;
            while start < n {
                let odd = month_is_odd(series.timestamps()[start])?;
                let mut end = start + 1;
                while end < n && month_is_odd(series.timestamps()[end])? == odd {
                    end += 1;
                }
                let (name, runs): (_, &mut Vec<TimeSeries>) = if odd {
                    ("val", &mut val_runs)
                } else {
                    ("test", &mut test_runs)
                };
                check_len(name, end - start, min_len.max(1))?;
                runs.push(series.slice(start..end)?);
                start = end;
            }
            if test_runs.is_empty() {
                return Err(Error::PartitionTooSmall {
                    partition: "test",
                    actual: 0,
                    needed: min_len.max(1),
                });
            }
            Ok(SplitSeries { train: series.slice(0..n_train)?, val: val_runs, test: test_runs })
        }
    }
}
