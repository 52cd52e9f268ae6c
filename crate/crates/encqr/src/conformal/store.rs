//! Bounded FIFO stores for conformity scores.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::{empirical_quantile, QuantileConvention};

/// A fixed-capacity FIFO of conformity scores. The capacity is pinned to
/// the number of warm-up scores, so the sliding update always trades the
/// oldest scores for the newest one-for-one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFifo {
    scores: VecDeque<f64>,
    capacity: usize,
}

impl ScoreFifo {
    /// Seed the store; its capacity becomes `scores.len()`.
    pub fn warm(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyResidualSet);
        }
        let capacity = scores.len();
        Ok(Self { scores: scores.into(), capacity })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Drop exactly `new.len()` oldest scores and append `new`.
    pub fn update(&mut self, new: &[f64]) -> Result<()> {
        if new.len() > self.capacity {
            return Err(Error::BatchSizeMismatch {
                expected: self.capacity,
                actual: new.len(),
            });
        }
        for _ in 0..new.len() {
            self.scores.pop_front();
        }
        self.scores.extend(new.iter().copied());
        Ok(())
    }

    /// Conformal-convention empirical quantile of the stored scores.
    pub fn quantile(&self, level: f64) -> Result<f64> {
        let values: Vec<f64> = self.scores.iter().copied().collect();
        empirical_quantile(&values, level, QuantileConvention::Conformal)
    }

    #[cfg(test)]
    pub(crate) fn contents(&self) -> Vec<f64> {
        self.scores.iter().copied().collect()
    }
}

/// Paired FIFOs for the lower-side and upper-side scores of asymmetric
/// conformalization. Both sides always hold the same number of scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStore {
    pub lo: ScoreFifo,
    pub hi: ScoreFifo,
}

impl ResidualStore {
    pub fn warm(lo_scores: Vec<f64>, hi_scores: Vec<f64>) -> Result<Self> {
        if lo_scores.len() != hi_scores.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} low-side scores for {} high-side scores",
                lo_scores.len(),
                hi_scores.len()
            )));
        }
        Ok(Self { lo: ScoreFifo::warm(lo_scores)?, hi: ScoreFifo::warm(hi_scores)? })
    }

    pub fn update(&mut self, lo_batch: &[f64], hi_batch: &[f64]) -> Result<()> {
        if lo_batch.len() != hi_batch.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} low-side scores for {} high-side scores",
                lo_batch.len(),
                hi_batch.len()
            )));
        }
        self.lo.update(lo_batch)?;
        self.hi.update(hi_batch)
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }
}
