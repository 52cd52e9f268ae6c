//! Adaptive prediction intervals for multi-step time series forecasting.
//!
//! The crate builds interval forecasters in three layers:
//!
//! 1. **Quantile regressors** ([`regress`]): linear pinball-loss models
//!    and quantile random forests, each predicting lower/median/upper
//!    tracks over a forecast horizon from a window of past steps.
//! 2. **Ensembles** ([`ensemble`]): members trained on disjoint
//!    contiguous slices of the training range, giving the leave-one-out
//!    estimates that calibration needs without a held-out set.
//! 3. **Conformalization** ([`conformal`]): five interval methods from
//!    uncalibrated quantile tracks (`raw_qr`) through static split
//!    conformal and CQR calibration to the sliding-FIFO `enbpi` and
//!    `encqr` variants whose widths keep adapting as the test stream
//!    reveals its targets.
//!
//! [`experiment`] wires the layers into reproducible TOML-configured
//! runs with leak-guarded evaluation, and [`eval`] scores them (PICP,
//! PINAW, CWC, hourly breakdowns). [`data`] covers CSV I/O, chronological
//! splits and synthetic benchmark series with known ground truth.

pub mod conformal;
pub mod data;
mod error;
pub mod ensemble;
pub mod eval;
pub mod experiment;
pub mod interval;
pub mod quantile;
pub mod regress;
pub mod series;
pub mod window;

pub use error::{Error, Result};

pub use conformal::{ConformalPredictor, ResidualPooling};
pub use eval::MetricReport;
pub use experiment::{
    emit_report, load_config, run_experiment, ExperimentConfig, MethodName, RunOutput,
};
pub use interval::IntervalBatch;
pub use quantile::{QuantileConvention, QuantileLevels};
pub use series::TimeSeries;
pub use window::WindowedDataset;
