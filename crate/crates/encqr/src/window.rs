//! Sliding input/output window extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Supervised pairs cut from a series: an input window of `n_x` steps and
/// the `n_y` target steps that immediately follow it.
///
/// Inputs are flattened step-major: for step `s` within the window, the
/// `n_features` values `[target, exo_0, exo_1, ..]` sit at
/// `s * n_features ..`. Targets are the raw target-channel values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// Index of the first target step of each pair in the source series.
    pub origins: Vec<usize>,
    pub n_x: usize,
    pub n_y: usize,
    pub n_features: usize,
}

impl WindowedDataset {
    /// Build a dataset directly from already-flattened pairs. Used for
    /// synthetic regression sets and for merging windows from several
    /// contiguous segments.
    pub fn from_pairs(
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        origins: Vec<usize>,
        n_x: usize,
        n_y: usize,
        n_features: usize,
    ) -> Result<Self> {
        if inputs.len() != targets.len() || inputs.len() != origins.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} inputs, {} targets, {} origins",
                inputs.len(),
                targets.len(),
                origins.len()
            )));
        }
        for x in &inputs {
            if x.len() != n_x * n_features {
                return Err(Error::ShapeMismatch(format!(
                    "input of length {}, expected {}",
                    x.len(),
                    n_x * n_features
                )));
            }
        }
        for y in &targets {
            if y.len() != n_y {
                return Err(Error::ShapeMismatch(format!(
                    "target of length {}, expected {n_y}",
                    y.len()
                )));
            }
        }
        Ok(Self { inputs, targets, origins, n_x, n_y, n_features })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Length of one flattened input vector.
    pub fn input_len(&self) -> usize {
        self.n_x * self.n_features
    }

    /// A new dataset keeping only the pairs at `indices` (in the given order).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i].clone()).collect(),
            origins: indices.iter().map(|&i| self.origins[i]).collect(),
            n_x: self.n_x,
            n_y: self.n_y,
            n_features: self.n_features,
        }
    }
}

/// The flattened input window covering steps `[end - n_x, end)` of `series`.
pub fn extract_input_window(series: &TimeSeries, end: usize, n_x: usize) -> Result<Vec<f64>> {
    if end < n_x || end > series.len() {
        return Err(Error::InvalidWindow(format!(
            "input window ending at step {end} with length {n_x} is out of bounds"
        )));
    }
    let d = series.n_features();
    let mut out = Vec::with_capacity(n_x * d);
    for step in end - n_x..end {
        out.push(series.target()[step]);
        for channel in series.exogenous() {
            out.push(channel[step]);
        }
    }
    Ok(out)
}

/// Cut all input/output pairs of shape `(n_x, n_y)` from `series`, moving
/// the window start by `stride` steps between consecutive pairs.
///
/// A series of length `T` yields `floor((T - n_x - n_y) / stride) + 1`
/// pairs; pair `k` has its first target step at `n_x + k * stride`.
pub fn make_sliding_windows(
    series: &TimeSeries,
    n_x: usize,
    n_y: usize,
    stride: usize,
) -> Result<WindowedDataset> {
    if n_x == 0 || n_y == 0 {
        return Err(Error::InvalidWindow("window lengths must be positive".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidWindow("stride must be positive".into()));
    }
    let needed = n_x + n_y;
    if series.len() < needed {
        return Err(Error::SeriesTooShort { needed, actual: series.len() });
    }
    let count = (series.len() - needed) / stride + 1;
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    let mut origins = Vec::with_capacity(count);
    for k in 0..count {
        let origin = n_x + k * stride;
        inputs.push(extract_input_window(series, origin, n_x)?);
        targets.push(series.target()[origin..origin + n_y].to_vec());
        origins.push(origin);
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        origins,
        n_x,
        n_y,
        n_features: series.n_features(),
    })
}
