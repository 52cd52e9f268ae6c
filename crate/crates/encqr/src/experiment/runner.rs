//! End-to-end experiment execution.
//!
//! The runner turns a validated [`ExperimentConfig`] into metrics: load
//! or generate the series, split it chronologically, normalize every
//! partition with statistics fitted on the training run alone, fit the
//! configured regressor(s), wrap them in the configured interval method,
//! and walk the test runs batch by batch behind an [`ObservationLedger`]
//! so no target can leak into an input before its batch was predicted.
//!
//! Everything downstream of the config is deterministic: rerunning the
//! same config reproduces the same trace and metrics exactly.

use serde::{Deserialize, Serialize};

use super::ledger::ObservationLedger;
use super::{DataConfig, ExperimentConfig, MethodName, ModelConfig};
use crate::conformal::ConformalPredictor;
use crate::data::{gen_synthetic, load_csv_series, split_series};
use crate::ensemble::{fit_ensemble, plan_subsets};
use crate::error::{Error, Result};
use crate::eval::{target_range, MetricReport};
use crate::quantile::QuantileLevels;
use crate::regress::{Model, QuantileAlgorithm, Trainer};
use crate::series::{ScaleParams, TimeSeries};
use crate::window::{make_sliding_windows, WindowedDataset};

/// One evaluated step of the test stream, on the normalized scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Running index over all evaluated steps, in prediction order.
    pub step: usize,
    pub timestamp: i64,
    pub y: f64,
    pub lower: f64,
    pub center: f64,
    pub upper: f64,
    pub covered: bool,
}

/// Run-level counters that are not quality metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    /// Interval bounds that crossed and had to be swapped back.
    pub bound_swaps: usize,
    pub n_batches: usize,
    pub train_len: usize,
    pub val_len: usize,
    pub test_len: usize,
    /// Evaluated test steps (test rows minus per-run burn-in and ragged
    /// tails shorter than one horizon).
    pub evaluated_steps: usize,
    /// Residual FIFO size for the sliding methods.
    pub store_len: Option<usize>,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricReport,
    pub trace: Vec<TraceRow>,
    pub diagnostics: Diagnostics,
    /// The train-fitted normalization, for mapping outputs back to the
    /// original units.
    pub scale: ScaleParams,
}

fn source_series(config: &ExperimentConfig) -> Result<TimeSeries> {
    match &config.data {
        DataConfig::Csv { path, target_column, exogenous_columns } => {
            load_csv_series(path, target_column, exogenous_columns)
        }
        DataConfig::Synthetic { synthetic } => Ok(gen_synthetic(synthetic)?.0),
    }
}

/// Window each run and pool the pairs. Origins are kept per-run; they
/// identify positions only within their own run and are not used by the
/// calibration consumers of the pooled set.
fn pooled_windows(
    runs: &[TimeSeries],
    n_x: usize,
    n_y: usize,
    stride: usize,
) -> Result<Option<WindowedDataset>> {
    if runs.is_empty() {
        return Ok(None);
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut origins = Vec::new();
    let mut n_features = 0;
    for run in runs {
        let windows = make_sliding_windows(run, n_x, n_y, stride)?;
        n_features = windows.n_features;
        inputs.extend(windows.inputs);
        targets.extend(windows.targets);
        origins.extend(windows.origins);
    }
    Ok(Some(WindowedDataset::from_pairs(inputs, targets, origins, n_x, n_y, n_features)?))
}

fn build_predictor(
    config: &ExperimentConfig,
    trainer: &Trainer,
    train: &TimeSeries,
    train_windows: &WindowedDataset,
    val_windows: Option<&WindowedDataset>,
    levels: QuantileLevels,
) -> Result<ConformalPredictor<Model>> {
    let alpha = config.method.alpha;
    let seed = config.run.seed;
    let name = config.method.name;
    if name.uses_ensemble() {
        let plan = plan_subsets(train.len(), config.ensemble.b, config.window.n_x, config.window.n_y)?;
        let ensemble = fit_ensemble(
            trainer,
            train_windows,
            &plan,
            levels,
            config.ensemble.aggregation.clone(),
            seed,
        )?;
        match name {
            MethodName::RawQr => ConformalPredictor::raw_qr(ensemble, alpha),
            MethodName::Enbpi => ConformalPredictor::enbpi(ensemble, train, alpha),
            MethodName::Encqr => {
                ConformalPredictor::encqr(ensemble, train, alpha, config.method.pooling)
            }
            _ => unreachable!("uses_ensemble covers exactly these methods"),
        }
    } else {
        let model = trainer.fit(train_windows, levels, seed)?;
        let calibration = val_windows.ok_or(Error::PartitionTooSmall {
            partition: "val",
            actual: 0,
            needed: config.window.n_x + config.window.n_y,
        })?;
        match name {
            MethodName::SplitCp => ConformalPredictor::split_cp(model, calibration, alpha),
            MethodName::Cqr => ConformalPredictor::cqr(model, calibration, alpha),
            _ => unreachable!("the remaining methods are single-model"),
        }
    }
}

/// Execute `config` and score the result.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let levels = config.levels()?;
    let n_x = config.window.n_x;
    let n_y = config.window.n_y;

    let series = source_series(config)?;
    let split = split_series(&series, &config.split, n_x + n_y)?;

    // Normalization statistics come from the training run alone; the
    // later partitions are mapped through them unseen.
    let scale = ScaleParams::fit(&split.train);
    let train = scale.normalize(&split.train)?;
    let val_runs: Vec<TimeSeries> =
        split.val.iter().map(|r| scale.normalize(r)).collect::<Result<_>>()?;
    let test_runs: Vec<TimeSeries> =
        split.test.iter().map(|r| scale.normalize(r)).collect::<Result<_>>()?;

    let train_windows = make_sliding_windows(&train, n_x, n_y, config.window.stride)?;
    let val_windows = pooled_windows(&val_runs, n_x, n_y, config.window.stride)?;

    let trainer = match &config.model {
        ModelConfig::Linear { linear } => {
            Trainer::Linear { hyper: linear.clone(), validation: val_windows.clone() }
        }
        ModelConfig::Forest { forest } => Trainer::Forest { hyper: forest.clone() },
    };

    let mut predictor =
        build_predictor(config, &trainer, &train, &train_windows, val_windows.as_ref(), levels)?;

    let mut trace: Vec<TraceRow> = Vec::new();
    let mut n_batches = 0;
    for run in &test_runs {
        let mut ledger = ObservationLedger::new(run, n_x)?;
        while ledger.remaining() >= n_y {
            let input = ledger.input_window(ledger.frontier(), n_x)?;
            let batch = predictor.predict_batch(&input)?;
            let timestamps = ledger.upcoming_timestamps(n_y)?.to_vec();
            let ys = ledger.reveal(n_y)?.to_vec();
            predictor.observe(&ys)?;
            n_batches += 1;
            // Models and scores live in normalized units; the trace
            // reports original ones.
            let y_raw = scale.denormalize_target(&ys);
            let lower = scale.denormalize_target(&batch.lower);
            let center = scale.denormalize_target(&batch.center);
            let upper = scale.denormalize_target(&batch.upper);
            for h in 0..n_y {
                let covered = lower[h] <= y_raw[h] && y_raw[h] <= upper[h];
                trace.push(TraceRow {
                    step: trace.len(),
                    timestamp: timestamps[h],
                    y: y_raw[h],
                    lower: lower[h],
                    center: center[h],
                    upper: upper[h],
                    covered,
                });
            }
        }
    }
    if trace.is_empty() {
        return Err(Error::PartitionTooSmall {
            partition: "test",
            actual: test_runs.iter().map(|r| r.len()).sum(),
            needed: n_x + n_y,
        });
    }

    // PINAW normalizes by the spread of the whole test partition in
    // original units, burn-in steps included.
    let all_test_targets: Vec<f64> =
        split.test.iter().flat_map(|r| r.target().iter().copied()).collect();
    let range = target_range(&all_test_targets)?;

    let lower: Vec<f64> = trace.iter().map(|r| r.lower).collect();
    let upper: Vec<f64> = trace.iter().map(|r| r.upper).collect();
    let targets: Vec<f64> = trace.iter().map(|r| r.y).collect();
    let timestamps: Vec<i64> = trace.iter().map(|r| r.timestamp).collect();
    let report = MetricReport::compute(
        &lower,
        &upper,
        &targets,
        &timestamps,
        range,
        config.method.alpha,
        config.run.eta,
    )?;

    let diagnostics = Diagnostics {
        method: predictor.method_name().to_string(),
        bound_swaps: predictor.bound_swaps(),
        n_batches,
        train_len: train.len(),
        val_len: val_runs.iter().map(|r| r.len()).sum(),
        test_len: test_runs.iter().map(|r| r.len()).sum(),
        evaluated_steps: trace.len(),
        store_len: predictor.store_len(),
    };

    Ok(RunOutput { report, trace, diagnostics, scale })
}
