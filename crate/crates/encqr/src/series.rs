//! Time series container and min-max scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An evenly sampled univariate target with optional exogenous channels.
///
/// Invariants, enforced at construction:
/// * all channels have the same length as `timestamps`, and the series is
///   non-empty;
/// * timestamps are strictly increasing with a constant stride equal to
///   `resolution` (seconds);
/// * every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    timestamps: Vec<i64>,
    target: Vec<f64>,
    exogenous: Vec<Vec<f64>>,
    resolution: i64,
}

impl TimeSeries {
    pub fn new(
        timestamps: Vec<i64>,
        target: Vec<f64>,
        exogenous: Vec<Vec<f64>>,
        resolution: i64,
    ) -> Result<Self> {
        if timestamps.is_empty() {
            return Err(Error::SeriesTooShort { needed: 1, actual: 0 });
        }
        if resolution <= 0 {
            return Err(Error::InvalidWindow(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if target.len() != timestamps.len() {
            return Err(Error::ShapeMismatch(format!(
                "target has {} values for {} timestamps",
                target.len(),
                timestamps.len()
            )));
        }
        for (c, channel) in exogenous.iter().enumerate() {
            if channel.len() != timestamps.len() {
                return Err(Error::ShapeMismatch(format!(
                    "exogenous channel {c} has {} values for {} timestamps",
                    channel.len(),
                    timestamps.len()
                )));
            }
        }
        let gaps: Vec<i64> = timestamps
            .windows(2)
            .filter(|w| w[1] - w[0] != resolution)
            .map(|w| w[0])
            .collect();
        if !gaps.is_empty() {
            return Err(Error::NonUniformResolution { expected: resolution, gaps });
        }
        for (i, v) in target.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { channel: "target".into(), index: i });
            }
        }
        for (c, channel) in exogenous.iter().enumerate() {
            for (i, v) in channel.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { channel: format!("exogenous {c}"), index: i });
                }
            }
        }
        Ok(Self { timestamps, target, exogenous, resolution })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a constructed series always has at least one step
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn exogenous(&self) -> &[Vec<f64>] {
        &self.exogenous
    }

    pub fn resolution(&self) -> i64 {
        self.resolution
    }

    /// Number of channels per step: the target plus every exogenous channel.
    pub fn n_features(&self) -> usize {
        1 + self.exogenous.len()
    }

    /// A contiguous sub-series covering `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidWindow(format!(
                "slice {range:?} out of bounds for series of length {}",
                self.len()
            )));
        }
        Ok(Self {
            timestamps: self.timestamps[range.clone()].to_vec(),
            target: self.target[range.clone()].to_vec(),
            exogenous: self.exogenous.iter().map(|c| c[range.clone()].to_vec()).collect(),
            resolution: self.resolution,
        })
    }
}

/// Per-channel min-max statistics, fitted on one partition and applied to
/// the others so that nothing about later data leaks into the scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    /// Channel 0 is the target, followed by the exogenous channels in order.
    pub channels: Vec<ChannelScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScale {
    pub min: f64,
    pub max: f64,
    /// Set when `min == max`; such a channel is mapped to 0.0 everywhere.
    pub constant: bool,
}

impl ChannelScale {
    fn fit(values: &[f64]) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
        }
        Self { min, max, constant: min == max }
    }

    fn apply(&self, v: f64) -> f64 {
        if self.constant {
            0.0
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    fn invert(&self, v: f64) -> f64 {
        if self.constant {
            self.min
        } else {
            v * (self.max - self.min) + self.min
        }
    }
}

impl ScaleParams {
    /// Fit per-channel min and max on `series` (normally the training
    /// partition).
    pub fn fit(series: &TimeSeries) -> Self {
        let mut channels = vec![ChannelScale::fit(series.target())];
        channels.extend(series.exogenous().iter().map(|c| ChannelScale::fit(c)));
        Self { channels }
    }

    /// Map every channel of `series` through `(v - min) / (max - min)`.
    pub fn normalize(&self, series: &TimeSeries) -> Result<TimeSeries> {
        if self.channels.len() != series.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "scale has {} channels, series has {}",
                self.channels.len(),
                series.n_features()
            )));
        }
        let target = series.target().iter().map(|&v| self.channels[0].apply(v)).collect();
        let exogenous = series
            .exogenous()
            .iter()
            .enumerate()
            .map(|(c, ch)| ch.iter().map(|&v| self.channels[c + 1].apply(v)).collect())
            .collect();
        TimeSeries::new(series.timestamps().to_vec(), target, exogenous, series.resolution())
    }

    /// Invert the target-channel scaling for a slice of values.
    pub fn denormalize_target(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.channels[0].invert(v)).collect()
    }
}

/// Fit scaling on `series` and normalize it in one call.
pub fn minmax_normalize(series: &TimeSeries) -> Result<(TimeSeries, ScaleParams)> {
    let params = ScaleParams::fit(series);
    let normalized = params.normalize(series)?;
    Ok((normalized, params))
}
