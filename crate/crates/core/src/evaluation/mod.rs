//! Cross-validated experiments: absolute error in Celsius, reconstruction
//! from saved models, per-fold training and method/architecture grids.

mod compare;
mod cv;
mod metrics;
mod model;
mod reconstruct;

pub use compare::{compare_methods, ComparisonRow, ComparisonTable, SeedResult};
pub use cv::{cross_validate, derive_seed, make_batch, CvReport, CvSetup, FoldRecord};
pub use metrics::abs_error;
pub use model::{TrainedModel, MODEL_FORMAT_VERSION};
pub use reconstruct::{reconstruct, Reconstruction};

use thiserror::Error;

use crate::field_data::DataError;
use crate::mlp::NetworkError;
use crate::optimizers::OptimError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: targets are {target_rows}x{target_cols}, predictions {pred_rows}x{pred_cols}")]
    Shape {
        target_rows: usize,
        target_cols: usize,
        pred_rows: usize,
        pred_cols: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("input columns {found:?} do not match the model's fixed sensors {expected:?}")]
    ColumnMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}, sensor {sensor}: reading {value} outside valid range [{min}, {max}]")]
    OutOfRange {
        row: usize,
        sensor: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("{rows} timestamps for {readings} reading rows")]
    TimestampCount { rows: usize, readings: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("seed list is empty")]
    NoSeeds,
    #[error("unsupported model format version {0}")]
    ModelVersion(u32),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
