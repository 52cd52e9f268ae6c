//! Synthetic series with known ground truth.
//!
//! Two generators: a daily-cycle series whose noise level swells during
//! daylight hours (interval widths should track it), and a stationary
//! AR(1) control whose noise never changes (interval widths should not).
//! Both return the exact per-hour mean and spread alongside the samples,
//! so tests can compare estimated intervals against true quantiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const HOURS_PER_DAY: usize = 24;
const SECONDS_PER_DAY: i64 = 86_400;
/// Generated series must span at least this many daily cycles at the
/// default hourly resolution.
const MIN_CYCLES: usize = 10;

/// Which generator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Solar-shaped daily mean with noise that grows from `night_sigma`
    /// to `day_sigma` along the same daylight curve.
    HeteroscedasticDaily,
    /// Mean-zero AR(1) with constant innovation noise.
    HomoscedasticAr,
}

/// Generator settings; the defaults give an hourly series starting at
/// 2018-01-01T00:00:00Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub kind: SyntheticKind,
    pub length: usize,
    pub seed: u64,
    pub amplitude: f64,
    pub night_sigma: f64,
    pub day_sigma: f64,
    pub ar_coeff: f64,
    pub ar_sigma: f64,
    pub start_timestamp: i64,
    pub resolution: i64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            kind: SyntheticKind::HeteroscedasticDaily,
            length: 6_000,
            seed: 0,
            amplitude: 1.0,
            night_sigma: 0.02,
            day_sigma: 0.3,
            ar_coeff: 0.8,
            ar_sigma: 0.1,
            start_timestamp: 1_514_764_800,
            resolution: 3_600,
        }
    }
}

/// The generating distribution, resolved per hour of day: at hour `h`
/// the sample is `mean[h] + scale[h] * z` with standard normal `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl SyntheticTruth {
    /// The exact `level`-quantile of the series at hour `hour`.
    pub fn quantile(&self, hour: usize, level: f64) -> Result<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidLevel(level));
        }
        let z = Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(level);
        Ok(self.mean[hour % HOURS_PER_DAY] + self.scale[hour % HOURS_PER_DAY] * z)
    }
}

/// Daylight intensity at hour `h`: a half-sine rising from 06:00, peaking
/// at noon, and clamped to zero overnight.
fn daylight(hour: usize) -> f64 {
    (std::f64::consts::PI * (hour as f64 - 6.0) / 12.0).sin().max(0.0)
}

fn hour_of(timestamp: i64) -> usize {
    (timestamp.rem_euclid(SECONDS_PER_DAY) / 3_600) as usize
}

fn validate(params: &SyntheticParams) -> Result<()> {
    let needed = MIN_CYCLES * HOURS_PER_DAY;
    if params.length < needed {
        return Err(Error::SeriesTooShort { needed, actual: params.length });
    }
    if params.resolution <= 0 {
        return Err(Error::InvalidConfig(format!(
            "resolution must be positive, got {}",
            params.resolution
        )));
    }
    let positive = [
        ("night_sigma", params.night_sigma),
        ("day_sigma", params.day_sigma),
        ("ar_sigma", params.ar_sigma),
    ];
    for (name, v) in positive {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
    }
    if !params.amplitude.is_finite() {
        return Err(Error::InvalidConfig("amplitude must be finite".into()));
    }
    if !params.ar_coeff.is_finite() || params.ar_coeff.abs() >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "ar_coeff must lie strictly inside (-1, 1) for stationarity, got {}",
            params.ar_coeff
        )));
    }
    Ok(())
}

/// Generate a series and its ground truth. The same parameters always
/// produce the same samples.
pub fn gen_synthetic(params: &SyntheticParams) -> Result<(TimeSeries, SyntheticTruth)> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let timestamps: Vec<i64> = (0..params.length as i64)
        .map(|i| params.start_timestamp + i * params.resolution)
        .collect();

    let (target, truth) = match params.kind {
        SyntheticKind::HeteroscedasticDaily => {
            let mean: Vec<f64> = (0..HOURS_PER_DAY)
                .map(|h| params.amplitude * daylight(h))
                .collect();
            let scale: Vec<f64> = (0..HOURS_PER_DAY)
                .map(|h| params.night_sigma + (params.day_sigma - params.night_sigma) * daylight(h))
                .collect();
            let target = timestamps
                .iter()
                .map(|&ts| {
                    let h = hour_of(ts);
                    let eps: f64 = rng.sample(StandardNormal);
                    mean[h] + scale[h] * eps
                })
                .collect();
            (target, SyntheticTruth { mean, scale })
        }
        SyntheticKind::HomoscedasticAr => {
            let stationary = params.ar_sigma / (1.0 - params.ar_coeff * params.ar_coeff).sqrt();
            let mut target = Vec::with_capacity(params.length);
            // Start from the stationary law so the whole series shares it.
            let first: f64 = rng.sample(StandardNormal);
            target.push(stationary * first);
            for _ in 1..params.length {
                let eps: f64 = rng.sample(StandardNormal);
                let prev = *target.last().expect("seeded above");
                target.push(params.ar_coeff * prev + params.ar_sigma * eps);
            }
            let truth = SyntheticTruth {
                mean: vec![0.0; HOURS_PER_DAY],
                scale: vec![stationary; HOURS_PER_DAY],
            };
            (target, truth)
        }
    };

    let series = TimeSeries::new(timestamps, target, vec![], params.resolution)?;
    Ok((series, truth))
}
