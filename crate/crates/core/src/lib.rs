//! Reconstruction of sensor readings at uncovered locations from a fixed subset
//! of deployed sensors.
//!
//! Historical readings from every location train a dense feed-forward network
//! whose inputs are the sensors that stay in place and whose outputs are the
//! locations whose sensors were moved elsewhere. Training minimizes the
//! un-averaged sum of squared errors with Rprop, BFGS, or Rprop followed by BFGS.
//!
//! - [`field_data`]: CSV ingestion, normalization, fold plans, subset selection,
//!   synthetic fields.
//! - [`mlp`]: network construction, forward pass, SSE loss and backpropagation
//!   over a flat parameter vector.
//! - [`optimizers`]: Rprop, BFGS with a strong-Wolfe line search, the hybrid
//!   schedule and the training trace.
//! - [`evaluation`]: absolute error in Celsius, reconstruction from saved
//!   models, k-fold cross-validation and method comparison grids.

// Validation is written as `!(x > bound)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod evaluation;
pub mod field_data;
pub mod matrix;
pub mod mlp;
pub mod optimizers;

mod error;

pub use error::{Error, Result};
pub use matrix::Matrix;
