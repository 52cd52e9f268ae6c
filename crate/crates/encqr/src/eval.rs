//! Interval quality metrics.
//!
//! Everything here scores a finished run: coverage (PICP), normalized
//! width (PINAW), the coverage-width criterion (CWC) combining the two,
//! a per-phase spread statistic for checking how heteroscedastic a series
//! is, and hour-of-day breakdowns of width and coverage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SECONDS_PER_DAY: i64 = 86_400;
const SECONDS_PER_HOUR: i64 = 3_600;
const HOURS_PER_DAY: usize = 24;

fn check_lengths(lower: &[f64], upper: &[f64], targets: &[f64]) -> Result<()> {
    if lower.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    if lower.len() != upper.len() || lower.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "interval tracks of lengths {}, {} against {} targets",
            lower.len(),
            upper.len(),
            targets.len()
        )));
    }
    Ok(())
}

/// Prediction interval coverage probability: the fraction of targets
/// falling inside the closed interval `[lower, upper]`.
pub fn picp(lower: &[f64], upper: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(lower, upper, targets)?;
    let covered = targets
        .iter()
        .zip(lower.iter().zip(upper))
        .filter(|(y, (lo, hi))| **lo <= **y && **y <= **hi)
        .count();
    Ok(covered as f64 / targets.len() as f64)
}

/// Mean interval width normalized by the target range `range`.
pub fn pinaw(lower: &[f64], upper: &[f64], range: f64) -> Result<f64> {
    if lower.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    if lower.len() != upper.len() {
        return Err(Error::ShapeMismatch(format!(
            "interval tracks of lengths {} and {}",
            lower.len(),
            upper.len()
        )));
    }
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::DegenerateRange);
    }
    let mean_width: f64 =
        lower.iter().zip(upper).map(|(lo, hi)| hi - lo).sum::<f64>() / lower.len() as f64;
    Ok(mean_width / range)
}

/// `max - min` of a value set, for use as the PINAW normalizer.
pub fn target_range(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    let range = max - min;
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::DegenerateRange);
    }
    Ok(range)
}

/// Coverage-width criterion: `(1 - pinaw) * exp(-eta * (picp - (1 - alpha))^2)`.
/// Width is rewarded only while coverage stays near its nominal level.
pub fn cwc(picp: f64, pinaw: f64, alpha: f64, eta: f64) -> f64 {
    let gap = picp - (1.0 - alpha);
    (1.0 - pinaw) * (-eta * gap * gap).exp()
}

/// Sample standard deviation with the `n - 1` denominator.
fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Spread-of-spreads statistic: split the series into `period` phase
/// classes by index modulo `period`, take the sample standard deviation
/// within each class, then the sample standard deviation across the
/// per-class values. Zero means every phase is equally noisy; large
/// values mean the noise level itself cycles with the period.
pub fn heteroscedasticity_measure(values: &[f64], period: usize) -> Result<f64> {
    if period < 2 {
        return Err(Error::InvalidConfig(format!(
            "heteroscedasticity period must be at least 2, got {period}"
        )));
    }
    if values.len() < 2 * period {
        return Err(Error::SeriesTooShort { needed: 2 * period, actual: values.len() });
    }
    let mut phases: Vec<Vec<f64>> = vec![Vec::new(); period];
    for (i, &v) in values.iter().enumerate() {
        phases[i % period].push(v);
    }
    let spreads: Vec<f64> = phases.iter().map(|p| sample_std(p)).collect();
    Ok(sample_std(&spreads))
}

/// Hour of day (0..24) of an epoch-seconds timestamp.
fn hour_of_day(timestamp: i64) -> usize {
    (timestamp.rem_euclid(SECONDS_PER_DAY) / SECONDS_PER_HOUR) as usize
}

/// The metric block written to `metrics.json` after a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub picp: f64,
    pub pinaw: f64,
    pub cwc: f64,
    pub alpha: f64,
    pub eta: f64,
    /// Number of evaluated steps.
    pub n: usize,
    /// Mean interval width per hour of day; `null` for hours never seen.
    pub per_hour_width: Vec<Option<f64>>,
    /// Coverage per hour of day; `null` for hours never seen.
    pub per_hour_coverage: Vec<Option<f64>>,
}

impl MetricReport {
    /// Score one run. `range` normalizes PINAW and should be the spread
    /// of the evaluation partition's targets on the same scale as the
    /// intervals.
    pub fn compute(
        lower: &[f64],
        upper: &[f64],
        targets: &[f64],
        timestamps: &[i64],
        range: f64,
        alpha: f64,
        eta: f64,
    ) -> Result<Self> {
        check_lengths(lower, upper, targets)?;
        if timestamps.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} timestamps against {} targets",
                timestamps.len(),
                targets.len()
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidLevel(alpha));
        }
        let picp = picp(lower, upper, targets)?;
        let pinaw = pinaw(lower, upper, range)?;
        let cwc = cwc(picp, pinaw, alpha, eta);

        let mut width_sum = [0.0_f64; HOURS_PER_DAY];
        let mut covered_sum = [0.0_f64; HOURS_PER_DAY];
        let mut counts = [0usize; HOURS_PER_DAY];
        for (i, &ts) in timestamps.iter().enumerate() {
            let h = hour_of_day(ts);
            width_sum[h] += upper[i] - lower[i];
            if lower[i] <= targets[i] && targets[i] <= upper[i] {
                covered_sum[h] += 1.0;
            }
            counts[h] += 1;
        }
        let per_hour_width = (0..HOURS_PER_DAY)
            .map(|h| (counts[h] > 0).then(|| width_sum[h] / counts[h] as f64))
            .collect();
        let per_hour_coverage = (0..HOURS_PER_DAY)
            .map(|h| (counts[h] > 0).then(|| covered_sum[h] / counts[h] as f64))
            .collect();

        Ok(Self {
            picp,
            pinaw,
            cwc,
            alpha,
            eta,
            n: targets.len(),
            per_hour_width,
            per_hour_coverage,
        })
    }
}
