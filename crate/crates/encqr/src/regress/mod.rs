//! Quantile regressors.
//!
//! Everything downstream (ensembles, conformal wrappers, the experiment
//! runner) talks to regressors through [`QuantileModel`], so any model that
//! can emit lower/median/upper quantile tracks for a multi-step horizon can
//! be plugged in. Two implementations ship with the crate:
//!
//! * [`LinearQuantileModel`]: one linear head per (level, horizon step)
//!   trained jointly by subgradient descent on the pinball loss;
//! * [`QuantileForestModel`]: a quantile regression forest whose leaves
//!   keep the training targets, so any level can be read off at prediction
//!   time.

mod forest;
mod linear;
mod loss;

pub use forest::{fit_quantile_forest, ForestHyper, QuantileForestModel};
pub use linear::{fit_linear_quantile, LinearHyper, LinearQuantileModel};
pub use loss::{multi_quantile_loss, pinball_loss, pinball_subgradient};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::QuantileLevels;
use crate::window::WindowedDataset;

/// Quantile tracks for one input window: per horizon step, the predicted
/// lower, median and upper quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePrediction {
    pub lo: Vec<f64>,
    pub mid: Vec<f64>,
    pub hi: Vec<f64>,
}

impl QuantilePrediction {
    pub fn horizon(&self) -> usize {
        self.lo.len()
    }
}

/// Re-sort the three per-step predictions into ascending order.
///
/// Independently trained heads can produce crossed quantiles; sorting per
/// step repairs the ordering while preserving the multiset of predicted
/// values at that step.
pub(crate) fn fix_crossing(pred: &mut QuantilePrediction) {
    for i in 0..pred.lo.len() {
        let mut v = [pred.lo[i], pred.mid[i], pred.hi[i]];
        v.sort_by(|a, b| a.total_cmp(b));
        pred.lo[i] = v[0];
        pred.mid[i] = v[1];
        pred.hi[i] = v[2];
    }
}

/// A fitted multi-horizon quantile regressor.
pub trait QuantileModel: Send + Sync {
    /// Nominal levels of the lower and upper tracks.
    fn levels(&self) -> QuantileLevels;

    /// Number of predicted steps per window.
    fn horizon(&self) -> usize;

    /// Expected length of a flattened input window.
    fn input_len(&self) -> usize;

    /// Predict all three tracks for one flattened input window. The
    /// returned tracks are non-crossing at every step.
    fn predict(&self, input: &[f64]) -> Result<QuantilePrediction>;
}

/// Serializable wrapper over the shipped model kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearQuantileModel),
    Forest(QuantileForestModel),
}

impl QuantileModel for Model {
    fn levels(&self) -> QuantileLevels {
        match self {
            Model::Linear(m) => m.levels(),
            Model::Forest(m) => m.levels(),
        }
    }

    fn horizon(&self) -> usize {
        match self {
            Model::Linear(m) => m.horizon(),
            Model::Forest(m) => m.horizon(),
        }
    }

    fn input_len(&self) -> usize {
        match self {
            Model::Linear(m) => m.input_len(),
            Model::Forest(m) => m.input_len(),
        }
    }

    fn predict(&self, input: &[f64]) -> Result<QuantilePrediction> {
        match self {
            Model::Linear(m) => m.predict(input),
            Model::Forest(m) => m.predict(input),
        }
    }
}

/// Anything that can fit a [`QuantileModel`] from windowed pairs. Ensemble
/// fitting hands each member its own data slice and seed through this trait.
pub trait QuantileAlgorithm: Sync {
    type Fitted: QuantileModel + Send;

    fn fit(&self, data: &WindowedDataset, levels: QuantileLevels, seed: u64) -> Result<Self::Fitted>;
}

/// The two shipped trainers behind one dispatchable type.
#[derive(Debug, Clone)]
pub enum Trainer {
    Linear {
        hyper: LinearHyper,
        /// Held-out pairs for early stopping; skipped when absent.
        validation: Option<WindowedDataset>,
    },
    Forest { hyper: ForestHyper },
}

impl QuantileAlgorithm for Trainer {
    type Fitted = Model;

    fn fit(&self, data: &WindowedDataset, levels: QuantileLevels, seed: u64) -> Result<Model> {
        match self {
            Trainer::Linear { hyper, validation } => {
                fit_linear_quantile(data, levels, hyper, validation.as_ref()).map(Model::Linear)
            }
            Trainer::Forest { hyper } => {
                fit_quantile_forest(data, levels, hyper, seed).map(Model::Forest)
            }
        }
    }
}

/// On-disk model container. The version tag lets the format evolve without
/// silently misreading old files.
#[derive(Debug, Serialize, Deserialize)]
struct VersionedModel {
    format_version: u32,
    model: Model,
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Write `model` to `path` as version-tagged JSON. Floating-point values
/// are printed in shortest round-trip form, so loading restores them
/// bit-exactly.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let wrapper = VersionedModel { format_version: MODEL_FORMAT_VERSION, model: model.clone() };
    let text = serde_json::to_string(&wrapper)
        .map_err(|e| Error::ModelFormat(format!("serialize: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Load a model previously written by [`save_model`].
pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    let wrapper: VersionedModel =
        serde_json::from_str(&text).map_err(|e| Error::ModelFormat(format!("parse: {e}")))?;
    if wrapper.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {}, expected {MODEL_FORMAT_VERSION}",
            wrapper.format_version
        )));
    }
    Ok(wrapper.model)
}
