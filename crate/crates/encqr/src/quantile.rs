//! Order-statistic quantiles.
//!
//! Two ranking conventions are used in this crate and both return an order
//! statistic of the input multiset, never an interpolated value:
//!
//! * [`QuantileConvention::Conformal`]: the `ceil(level * (n + 1))`-th
//!   smallest element, clamped to the maximum when the rank exceeds `n`.
//!   This is the finite-sample-corrected rank used whenever conformity
//!   scores are turned into interval offsets.
//! * [`QuantileConvention::Plain`]: the `ceil(level * n)`-th smallest
//!   element, used for descriptive statistics and for leaf quantiles in
//!   the forest regressor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ranking convention for [`empirical_quantile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileConvention {
    /// Rank `ceil(level * (n + 1))`, clamped into `[1, n]`.
    Conformal,
    /// Rank `ceil(level * n)`, clamped into `[1, n]`.
    Plain,
}

/// Turns `level * scale` into a 1-based rank.
///
/// Products such as `0.9 * 20` do not round-trip through binary floating
/// point exactly, so values within `1e-9` of an integer are snapped to that
/// integer before taking the ceiling.
fn rank(level: f64, scale: usize) -> usize {
    let t = level * scale as f64;
    let nearest = t.round();
    let r = if (t - nearest).abs() < 1e-9 { nearest } else { t.ceil() };
    r as usize
}

/// Empirical quantile of `values` at `level` under the given convention.
///
/// Errors with [`Error::EmptyResidualSet`] on an empty slice and
/// [`Error::InvalidLevel`] when `level` is outside `(0, 1)`.
pub fn empirical_quantile(
    values: &[f64],
    level: f64,
    convention: QuantileConvention,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyResidualSet);
    }
    if !(level > 0.0 && level < 1.0) || !level.is_finite() {
        return Err(Error::InvalidLevel(level));
    }
    let n = values.len();
    let r = match convention {
        QuantileConvention::Conformal => rank(level, n + 1),
        QuantileConvention::Plain => rank(level, n),
    }
    .clamp(1, n);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted[r - 1])
}

/// The pair of nominal quantile levels a regressor is trained on, with the
/// median always included as the central track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileLevels {
    /// Lower nominal level, in `(0, 0.5)`.
    pub lo: f64,
    /// Upper nominal level, in `(0.5, 1)`.
    pub hi: f64,
}

impl QuantileLevels {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < 0.5) || !lo.is_finite() {
            return Err(Error::InvalidLevel(lo));
        }
        if !(hi > 0.5 && hi < 1.0) || !hi.is_finite() {
            return Err(Error::InvalidLevel(hi));
        }
        Ok(Self { lo, hi })
    }

    /// The standard choice for a `1 - alpha` interval: `alpha / 2` and
    /// `1 - alpha / 2`.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidLevel(alpha));
        }
        Self::new(alpha / 2.0, 1.0 - alpha / 2.0)
    }

    /// The central track is always the median.
    pub const fn mid(&self) -> f64 {
        0.5
    }

    /// Levels in ascending order: `[lo, 0.5, hi]`.
    pub fn as_array(&self) -> [f64; 3] {
        [self.lo, self.mid(), self.hi]
    }
}
