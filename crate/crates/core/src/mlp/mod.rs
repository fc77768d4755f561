//! Dense feed-forward regression network over a flat parameter vector.
//!
//! Parameters are stored layer-major; within a layer the weight matrix comes
//! first (row-major, shape `(size_l, size_{l-1})`) followed by the bias vector.
//! Hidden layers apply the configured activation, the output layer is linear.

mod batch;
mod network;
mod spec;

pub use batch::SampleBatch;
pub use network::{build_network, gradient, sse_and_gradient, sse_loss, Network};
pub use spec::{Activation, NetworkSpec, TABLE_PRESETS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite input value at position {0}")]
    NonFinite(usize),
}
