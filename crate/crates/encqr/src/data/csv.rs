//! CSV input and output for time series.
//!
//! Files carry one header row; a `timestamp` column holds either epoch
//! seconds or an RFC 3339 instant. Rows may arrive in any order — they
//! are sorted by timestamp on load — but after sorting the stride must
//! be uniform, since the models index time by position.

use std::path::Path;

use chrono::DateTime;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const TIMESTAMP_COLUMN: &str = "timestamp";

fn parse_timestamp(raw: &str, row: usize) -> Result<i64> {
    let trimmed = raw.trim();
    if let Ok(epoch) = trimmed.parse::<i64>() {
        return Ok(epoch);
    }
    DateTime::parse_from_rfc3339(trimmed)
        .map(|dt| dt.timestamp())
        .map_err(|e| Error::Parse {
            row,
            message: format!("timestamp {trimmed:?} is neither epoch seconds nor RFC 3339: {e}"),
        })
}

fn parse_value(raw: &str, column: &str, row: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|e| Error::Parse {
        row,
        message: format!("column {column:?} value {raw:?}: {e}"),
    })
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Read a series from `path`, taking the target from `target_column` and
/// exogenous channels from `exogenous_columns` in the given order.
pub fn load_csv_series(
    path: &Path,
    target_column: &str,
    exogenous_columns: &[String],
) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let ts_idx = column_index(&headers, TIMESTAMP_COLUMN)?;
    let target_idx = column_index(&headers, target_column)?;
    let exo_idx = exogenous_columns
        .iter()
        .map(|name| column_index(&headers, name))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(i64, f64, Vec<f64>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based file line, after the header
        let record = record?;
        let grab = |idx: usize| {
            record.get(idx).ok_or_else(|| Error::Parse {
                row,
                message: format!("row has only {} fields", record.len()),
            })
        };
        let ts = parse_timestamp(grab(ts_idx)?, row)?;
        let target = parse_value(grab(target_idx)?, target_column, row)?;
        let exo = exo_idx
            .iter()
            .zip(exogenous_columns)
            .map(|(&idx, name)| parse_value(grab(idx)?, name, row))
            .collect::<Result<Vec<_>>>()?;
        rows.push((ts, target, exo));
    }

    if rows.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, actual: rows.len() });
    }
    rows.sort_by_key(|r| r.0);

    let expected = rows[1].0 - rows[0].0;
    let mut offending: Vec<i64> = rows
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .filter(|&gap| gap != expected)
        .collect();
    if !offending.is_empty() {
        offending.sort_unstable();
        offending.dedup();
        return Err(Error::NonUniformResolution { expected, gaps: offending });
    }

    let timestamps: Vec<i64> = rows.iter().map(|r| r.0).collect();
    let target: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let exogenous: Vec<Vec<f64>> = (0..exogenous_columns.len())
        .map(|c| rows.iter().map(|r| r.2[c]).collect())
        .collect();
    TimeSeries::new(timestamps, target, exogenous, expected)
}

/// Write `series` to `path` with epoch-second timestamps. The target
/// column is named `target_column`; exogenous channels become `exo_0`,
/// `exo_1`, ... in order. Values print in the shortest form that parses
/// back to the same float, so a load of the written file reproduces the
/// series exactly.
pub fn write_csv_series(path: &Path, series: &TimeSeries, target_column: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![TIMESTAMP_COLUMN.to_string(), target_column.to_string()];
    header.extend((0..series.exogenous().len()).map(|c| format!("exo_{c}")));
    writer.write_record(&header)?;
    for i in 0..series.len() {
        let mut record = vec![
            series.timestamps()[i].to_string(),
            format!("{}", series.target()[i]),
        ];
        record.extend(series.exogenous().iter().map(|ch| format!("{}", ch[i])));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
