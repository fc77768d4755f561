//! Full-batch optimizers over a flat parameter vector: Rprop (iRprop⁻),
//! BFGS with a strong-Wolfe line search, and a driver that runs either or the
//! Rprop-then-BFGS hybrid while recording a per-iteration loss trace.

mod bfgs;
mod rprop;
mod train;

pub use bfgs::{line_search, BfgsOutcome, BfgsState, BfgsStep, LineSearchParams, LineSearchResult};
pub use rprop::{RpropParams, RpropState};
pub use train::{train, Method, Phase, StopReason, TraceRecord, TrainConfig, TrainTrace};

use thiserror::Error;

use crate::mlp::{sse_and_gradient, NetworkError, NetworkSpec, SampleBatch};

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("non-finite gradient component at index {0}")]
    NonFiniteGradient(usize),
    #[error("non-finite loss")]
    NonFiniteLoss,
    #[error("line search found no strong-Wolfe point within {evaluations} evaluations")]
    LineSearchFailed { evaluations: usize },
    #[error("vector length mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A differentiable scalar function of a parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns the value at `x` and writes the gradient into `grad`.
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64, OptimError>;
}

/// Wraps a closure `(x, grad) -> value` as an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64, OptimError> {
        Ok((self.f)(x, grad))
    }
}

/// Network SSE over a fixed batch as a function of the flat parameters.
pub struct SseObjective<'a> {
    pub spec: &'a NetworkSpec,
    pub batch: &'a SampleBatch,
}

impl Objective for SseObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64, OptimError> {
        Ok(sse_and_gradient(self.spec, x, self.batch, grad)?)
    }
}

pub(crate) fn check_finite(grad: &[f64]) -> Result<(), OptimError> {
    match grad.iter().position(|g| !g.is_finite()) {
        Some(i) => Err(OptimError::NonFiniteGradient(i)),
        None => Ok(()),
    }
}
