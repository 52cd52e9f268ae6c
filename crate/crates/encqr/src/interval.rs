//! Prediction interval containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-step prediction intervals for one batch, all at the same nominal
/// miscoverage `alpha`.
///
/// `lower[i] <= upper[i]` holds for every step. When a conformal offset
/// pushes the two bounds past each other they are swapped, which keeps the
/// midpoint unchanged; [`IntervalBatch::assemble`] reports how many steps
/// needed the swap so callers can surface it in run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBatch {
    pub lower: Vec<f64>,
    pub center: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
}

impl IntervalBatch {
    /// Build a batch from raw bounds, swapping any crossed pair. Returns
    /// the batch together with the number of swapped steps.
    pub fn assemble(
        mut lower: Vec<f64>,
        center: Vec<f64>,
        mut upper: Vec<f64>,
        alpha: f64,
    ) -> Result<(Self, usize)> {
        if lower.len() != center.len() || lower.len() != upper.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} lower, {} center, {} upper values",
                lower.len(),
                center.len(),
                upper.len()
            )));
        }
        let mut swaps = 0;
        for i in 0..lower.len() {
            if lower[i] > upper[i] {
                std::mem::swap(&mut lower[i], &mut upper[i]);
                swaps += 1;
            }
        }
        Ok((Self { lower, center, upper, alpha }, swaps))
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Per-step interval widths.
    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }
}
