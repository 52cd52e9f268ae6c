//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: need {needed} steps, have {actual}")]
    SeriesTooShort { needed: usize, actual: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("non-finite value in channel {channel:?} at index {index}")]
    NonFiniteValue { channel: String, index: usize },

    #[error("empty residual set")]
    EmptyResidualSet,

    #[error("no training data")]
    NoTrainingData,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(
        "ensemble subsets too small: each subset holds {subset_len} steps but one training \
         window needs {window}; reduce the number of learners or shorten the windows"
    )]
    SubsetsTooSmall { subset_len: usize, window: usize },

    #[error("no out-of-sample learner for step {step}")]
    NoOutOfSampleLearner { step: usize },

    #[error("empty aggregate")]
    EmptyAggregate,

    #[error("batch size mismatch: expected {expected} steps, got {actual}")]
    BatchSizeMismatch { expected: usize, actual: usize },

    #[error("degenerate target range")]
    DegenerateRange,

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("non-uniform resolution: expected stride {expected}s but found gaps of {gaps:?}s")]
    NonUniformResolution { expected: i64, gaps: Vec<i64> },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("partition {partition:?} too small: {actual} steps, need {needed}")]
    PartitionTooSmall {
        partition: &'static str,
        actual: usize,
        needed: usize,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid quantile level {0}")]
    InvalidLevel(f64),

    #[error("observation protocol violation: {0}")]
    Protocol(String),

    #[error("model serialization: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that stem from user-supplied configuration rather
    /// than from a failure while running an experiment.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
