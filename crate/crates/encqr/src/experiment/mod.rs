//! Experiment configuration and orchestration.
//!
//! A run is described by one TOML file: where the data comes from, how it
//! is split, which regressor and interval method to use, and where the
//! outputs go. [`load_config`] applies `--set key.path=value` overrides
//! on the raw TOML before deserializing, so every field stays scriptable
//! without a matching flag.

mod ledger;
mod report;
mod runner;

pub use ledger::ObservationLedger;
pub use report::emit_report;
pub use runner::{run_experiment, Diagnostics, RunOutput, TraceRow};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conformal::ResidualPooling;
use crate::data::{SplitSpec, SyntheticParams};
use crate::ensemble::Aggregation;
use crate::error::{Error, Result};
use crate::quantile::QuantileLevels;
use crate::regress::{ForestHyper, LinearHyper};

/// Where the series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataConfig {
    /// Load from a CSV file with a `timestamp` column.
    Csv {
        path: PathBuf,
        target_column: String,
        #[serde(default)]
        exogenous_columns: Vec<String>,
    },
    /// Generate a synthetic series in memory.
    Synthetic {
        #[serde(default)]
        synthetic: SyntheticParams,
    },
}

/// Which regressor family fits the quantile tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Linear {
        #[serde(default)]
        linear: LinearHyper,
    },
    Forest {
        #[serde(default)]
        forest: ForestHyper,
    },
}

/// The interval methods the runner can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    SplitCp,
    Cqr,
    RawQr,
    Enbpi,
    Encqr,
}

impl MethodName {
    pub const ALL: [MethodName; 5] = [
        MethodName::SplitCp,
        MethodName::Cqr,
        MethodName::RawQr,
        MethodName::Enbpi,
        MethodName::Encqr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodName::SplitCp => "split_cp",
            MethodName::Cqr => "cqr",
            MethodName::RawQr => "raw_qr",
            MethodName::Enbpi => "enbpi",
            MethodName::Encqr => "encqr",
        }
    }

    /// Sliding methods keep a residual FIFO that must be fed after every
    /// batch; the others are calibrated once.
    pub fn is_sliding(&self) -> bool {
        matches!(self, MethodName::Enbpi | MethodName::Encqr)
    }

    /// Ensemble methods train one member per training subset; the others
    /// train a single model on the whole training range.
    pub fn uses_ensemble(&self) -> bool {
        matches!(self, MethodName::RawQr | MethodName::Enbpi | MethodName::Encqr)
    }

    /// Whether a validation partition is required for calibration.
    pub fn needs_calibration_partition(&self) -> bool {
        matches!(self, MethodName::SplitCp | MethodName::Cqr)
    }
}

impl std::str::FromStr for MethodName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodName::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method {s:?}; expected one of split_cp, cqr, raw_qr, enbpi, encqr"
                ))
            })
    }
}

/// Nominal levels of the lower and upper regression tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPair {
    pub lo: f64,
    pub hi: f64,
}

fn default_alpha() -> f64 {
    0.1
}

/// The interval method and its miscoverage target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub name: MethodName,
    /// Nominal miscoverage; intervals aim for `1 - alpha` coverage.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// FIFO layout for `encqr`; ignored by the other methods.
    #[serde(default)]
    pub pooling: ResidualPooling,
    /// Track levels for the regressors. Defaults to `alpha / 2` and
    /// `1 - alpha / 2`; set explicitly to study miscalibrated tracks.
    #[serde(default)]
    pub levels: Option<LevelPair>,
}

fn default_b() -> usize {
    3
}

/// Ensemble shape for the methods that use one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Number of disjoint training subsets, one member each.
    #[serde(default = "default_b")]
    pub b: usize,
    #[serde(default = "Aggregation::default")]
    pub aggregation: Aggregation,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { b: default_b(), aggregation: Aggregation::default() }
    }
}

fn default_stride() -> usize {
    1
}

/// Input/output window geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Input steps per window.
    pub n_x: usize,
    /// Forecast steps per window.
    pub n_y: usize,
    /// Stride between consecutive training windows.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Observations revealed per evaluation batch. Exactly one forecast
    /// window is issued per batch, so this must equal `n_y`; it exists in
    /// the schema so configs state the protocol explicitly.
    #[serde(default)]
    pub s: Option<usize>,
}

fn default_eta() -> f64 {
    30.0
}

/// Run-level knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed; everything stochastic derives from it.
    pub seed: u64,
    /// Sharpness of the coverage penalty in the CWC metric.
    pub eta: f64,
    /// Output directory; overridable by `--out` and `ENCQR_OUT_DIR`.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: 0, eta: default_eta(), out_dir: None }
    }
}

/// A full experiment description, as parsed from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub split: SplitSpec,
    pub model: ModelConfig,
    pub method: MethodConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub window: WindowConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    /// Parse and validate a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// The regression track levels, explicit or derived from `alpha`.
    pub fn levels(&self) -> Result<QuantileLevels> {
        match self.method.levels {
            Some(LevelPair { lo, hi }) => QuantileLevels::new(lo, hi),
            None => QuantileLevels::from_alpha(self.method.alpha),
        }
    }

    /// Check everything that does not need the data itself.
    pub fn validate(&self) -> Result<()> {
        let alpha = self.method.alpha;
        if !alpha.is_finite() || !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "method.alpha must lie strictly inside (0, 1), got {alpha}"
            )));
        }
        self.levels().map_err(|e| Error::InvalidConfig(e.to_string()))?;

        if self.window.n_x == 0 || self.window.n_y == 0 {
            return Err(Error::InvalidConfig(format!(
                "window.n_x and window.n_y must be positive, got ({}, {})",
                self.window.n_x, self.window.n_y
            )));
        }
        if self.window.stride == 0 {
            return Err(Error::InvalidConfig("window.stride must be positive".into()));
        }
        if let Some(s) = self.window.s {
            if s != self.window.n_y {
                return Err(Error::InvalidConfig(format!(
                    "window.s must equal window.n_y ({}), got {s}: each batch issues one \
                     forecast window and reveals exactly its targets",
                    self.window.n_y
                )));
            }
        }

        if self.method.name.uses_ensemble() {
            if self.ensemble.b < 2 {
                return Err(Error::InvalidConfig(format!(
                    "ensemble.b must be at least 2 for {}, got {}",
                    self.method.name.as_str(),
                    self.ensemble.b
                )));
            }
            if self.window.stride != 1 {
                return Err(Error::InvalidConfig(format!(
                    "ensemble methods assign every stride-1 training window to a subset; \
                     window.stride must be 1, got {}",
                    self.window.stride
                )));
            }
            if let Aggregation::TrimmedMean { fraction } = self.ensemble.aggregation {
                if !fraction.is_finite() || !(0.0..0.5).contains(&fraction) {
                    return Err(Error::InvalidConfig(format!(
                        "ensemble.aggregation.fraction must lie in [0, 0.5), got {fraction}"
                    )));
                }
            }
        }

        if self.method.name.needs_calibration_partition() {
            let val_missing = match &self.split {
                SplitSpec::Fractions { val, .. } => *val <= 0.0,
                SplitSpec::Boundaries { val_start, test_start } => val_start >= test_start,
                SplitSpec::InterleaveMonths { .. } => false, // known once split
            };
            if val_missing {
                return Err(Error::InvalidConfig(format!(
                    "{} calibrates on the validation partition, but the split produces none",
                    self.method.name.as_str()
                )));
            }
        }
        Ok(())
    }
}

/// Parse a raw override value: anything that parses as a TOML literal
/// (number, bool, array, quoted string) is taken as such, otherwise it is
/// a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    if let Ok(table) = wrapped.parse::<toml::Table>() {
        if let Some(v) = table.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

/// Set `dotted.path` to `raw` inside a TOML tree, creating intermediate
/// tables as needed.
fn apply_override(root: &mut toml::Value, dotted: &str, raw: &str) -> Result<()> {
    if dotted.is_empty() {
        return Err(Error::InvalidConfig("override key must not be empty".into()));
    }
    let mut cursor = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let table = cursor.as_table_mut().ok_or_else(|| {
            Error::InvalidConfig(format!("override {dotted:?} descends into a non-table"))
        })?;
        cursor = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = cursor.as_table_mut().ok_or_else(|| {
        Error::InvalidConfig(format!("override {dotted:?} descends into a non-table"))
    })?;
    table.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw));
    Ok(())
}

/// Read a config file and apply `key=value` overrides before validating.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidConfig(format!("cannot read config {}: {e}", path.display()))
    })?;
    load_config_str(&text, overrides)
}

/// [`load_config`] on already-loaded TOML text.
pub fn load_config_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut value: toml::Value =
        text.parse().map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
    for entry in overrides {
        let (key, raw) = entry.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("override {entry:?} is not of the form key.path=value"))
        })?;
        apply_override(&mut value, key.trim(), raw.trim())?;
    }
    let config: ExperimentConfig =
        value.try_into().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
