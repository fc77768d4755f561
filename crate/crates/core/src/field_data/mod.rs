//! Sensor time-series datasets: CSV ingestion, normalization, fold planning,
//! fixed/moved subset selection and a synthetic field generator.

mod dataset;
mod folds;
mod normalize;
mod subsets;
mod synthetic;

pub use dataset::{Dataset, LoadOptions, LoadReport, MissingPolicy, DEFAULT_VALID_RANGE};
pub use folds::{split_kfold, FoldPlan};
pub use normalize::{fit_normalizer, NormParams, NormStrategy};
pub use subsets::{select_subsets, SubsetMethod, SubsetSplit};
pub use synthetic::{gen_synthetic, Basis, FieldConfig};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {0}")]
    NotFound(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: bad timestamp {value:?}")]
    BadTimestamp { line: u64, value: String },
    #[error("line {line}: timestamps must be strictly increasing")]
    NonMonotoneTimestamps { line: u64 },
    #[error("line {line}, sensor {sensor}: missing or unparsable value {value:?}")]
    MissingValue {
        line: u64,
        sensor: String,
        value: String,
    },
    #[error("line {line}, sensor {sensor}: reading {value} outside valid range [{min}, {max}]")]
    OutOfRange {
        line: u64,
        sensor: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("need at least 2 sensors, found {0}")]
    TooFewSensors(usize),
    #[error("need at least {min} samples, found {found}")]
    TooFewSamples { found: usize, min: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("sensor {0}: degenerate range (max equals min)")]
    DegenerateRange(String),
    #[error("fold count {k} out of range for {n} samples (need 2 <= k <= n)")]
    FoldCount { k: usize, n: usize },
    #[error("n_fixed {n_fixed} out of range for {n_sensors} sensors (need 1 <= n_fixed < n_sensors)")]
    SubsetSize { n_fixed: usize, n_sensors: usize },
    #[error("unknown sensor id {0:?}")]
    UnknownSensor(String),
    #[error("duplicate sensor id {0:?}")]
    DuplicateSensor(String),
    #[error("invalid field config: {0}")]
    FieldConfig(String),
}
