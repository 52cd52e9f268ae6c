//! Loading, splitting, and generating series.

mod csv;
mod split;
mod synthetic;

pub use csv::{load_csv_series, write_csv_series};
pub use split::{split_series, SplitSeries, SplitSpec};
pub use synthetic::{gen_synthetic, SyntheticKind, SyntheticParams, SyntheticTruth};
