//! Run artifacts on disk.
//!
//! Three files per run: `metrics.json` (the [`MetricReport`]),
//! `intervals.csv` (the per-step trace), and `per_hour.csv` (hour-of-day
//! width and coverage). Each file is written to a temporary sibling and
//! atomically renamed into place, so a crash mid-write never leaves a
//! truncated artifact behind. Floats print in shortest round-trip form;
//! rerunning the same config rewrites byte-identical files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::MetricReport;

use super::runner::RunOutput;

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut file = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut file, bytes)?;
    file.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn metrics_json(report: &MetricReport) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::ModelFormat(format!("metrics serialize: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn intervals_csv(output: &RunOutput) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["step", "timestamp", "y", "lower", "center", "upper", "covered"])?;
    for row in &output.trace {
        writer.write_record([
            row.step.to_string(),
            row.timestamp.to_string(),
            format!("{}", row.y),
            format!("{}", row.lower),
            format!("{}", row.center),
            format!("{}", row.upper),
            row.covered.to_string(),
        ])?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e.to_string())))
}

fn per_hour_csv(report: &MetricReport) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["hour", "width", "coverage"])?;
    for hour in 0..report.per_hour_width.len() {
        let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        writer.write_record([
            hour.to_string(),
            cell(report.per_hour_width[hour]),
            cell(report.per_hour_coverage[hour]),
        ])?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e.to_string())))
}

/// Write `metrics.json`, `intervals.csv` and `per_hour.csv` into
/// `out_dir`, creating the directory if needed.
pub fn emit_report(out_dir: &Path, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_atomic(out_dir, "metrics.json", &metrics_json(&output.report)?)?;
    write_atomic(out_dir, "intervals.csv", &intervals_csv(output)?)?;
    write_atomic(out_dir, "per_hour.csv", &per_hour_csv(&output.report)?)?;
    Ok(())
}
