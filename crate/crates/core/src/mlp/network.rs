use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NetworkError, NetworkSpec, SampleBatch};
use crate::matrix::{dot, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    spec: NetworkSpec,
    params: Vec<f64>,
}

/// Weights uniform in `[-1/√fan_in, 1/√fan_in]` drawn from `spec.init_seed`, biases zero.
pub fn build_network(spec: &NetworkSpec) -> Result<Network, NetworkError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.init_seed);
    let mut params = Vec::with_capacity(spec.param_count());
    for w in spec.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)));
        params.extend(std::iter::repeat_n(0.0, fan_out));
    }
    Ok(Network {
        spec: spec.clone(),
        params,
    })
}

impl Network {
    /// Rebuilds a network from a flat parameter vector (the inverse of [`Network::flatten`]).
    pub fn from_params(spec: &NetworkSpec, params: Vec<f64>) -> Result<Self, NetworkError> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(NetworkError::Dimension {
                what: "parameter vector length",
                expected: spec.param_count(),
                found: params.len(),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            params,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.params.clone()
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    /// Weight matrix of weight layer `l` (0 = first hidden layer) as a row-major slice.
    pub fn weights(&self, l: usize) -> &[f64] {
        let (start, rows, cols) = self.layer_block(l);
        &self.params[start..start + rows * cols]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let (start, rows, cols) = self.layer_block(l);
        &self.params[start + rows * cols..start + rows * (cols + 1)]
    }

    fn layer_block(&self, l: usize) -> (usize, usize, usize) {
        let start = self.spec.layer_offsets()[l];
        (start, self.spec.layer_sizes[l + 1], self.spec.layer_sizes[l])
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NetworkError> {
        check_len("input length", self.spec.n_inputs(), input.len())?;
        if let Some(pos) = input.iter().position(|v| !v.is_finite()) {
            return Err(NetworkError::NonFinite(pos));
        }
        let mut ws = Workspace::new(&self.spec);
        ws.forward(&self.spec, &self.params, input);
        Ok(ws.output().to_vec())
    }

    /// Row-wise forward pass.
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix, NetworkError> {
        check_len("input columns", self.spec.n_inputs(), inputs.cols())?;
        if let Some(pos) = inputs.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(NetworkError::NonFinite(pos));
        }
        let mut ws = Workspace::new(&self.spec);
        let mut out = Matrix::zeros(inputs.rows(), self.spec.n_outputs());
        for (i, x) in inputs.iter_rows().enumerate() {
            ws.forward(&self.spec, &self.params, x);
            out.row_mut(i).copy_from_slice(ws.output());
        }
        Ok(out)
    }
}

/// SSE = Σ_j ‖y_j − p_j‖², no averaging.
pub fn sse_loss(net: &Network, batch: &SampleBatch) -> Result<f64, NetworkError> {
    check_batch(&net.spec, batch)?;
    let mut ws = Workspace::new(&net.spec);
    let mut total = 0.0;
    for (x, y) in batch.inputs.iter_rows().zip(batch.targets.iter_rows()) {
        ws.forward(&net.spec, &net.params, x);
        total += ws.output().iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum::<f64>();
    }
    Ok(total)
}

/// Gradient of [`sse_loss`] with respect to the flat parameter vector.
pub fn gradient(net: &Network, batch: &SampleBatch) -> Result<Vec<f64>, NetworkError> {
    let mut grad = vec![0.0; net.params.len()];
    sse_and_gradient(&net.spec, &net.params, batch, &mut grad)?;
    Ok(grad)
}

/// SSE and its gradient at `params`, written into `grad`, by reverse-mode backpropagation.
pub fn sse_and_gradient(
    spec: &NetworkSpec,
    params: &[f64],
    batch: &SampleBatch,
    grad: &mut [f64],
) -> Result<f64, NetworkError> {
    check_batch(spec, batch)?;
    check_len("parameter vector length", spec.param_count(), params.len())?;
    check_len("gradient length", spec.param_count(), grad.len())?;
    let mut ws = Workspace::new(spec);
    grad.fill(0.0);
    let mut total = 0.0;
    for (x, y) in batch.inputs.iter_rows().zip(batch.targets.iter_rows()) {
        ws.forward(spec, params, x);
        total += ws.backward(spec, params, y, grad);
    }
    Ok(total)
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), NetworkError> {
    if expected == found {
        Ok(())
    } else {
        Err(NetworkError::Dimension {
            what,
            expected,
            found,
        })
    }
}

fn check_batch(spec: &NetworkSpec, batch: &SampleBatch) -> Result<(), NetworkError> {
    check_len("batch input columns", spec.n_inputs(), batch.inputs.cols())?;
    check_len("batch target columns", spec.n_outputs(), batch.targets.cols())?;
    check_len("batch target rows", batch.inputs.rows(), batch.targets.rows())
}

/// Per-layer activation and delta buffers reused across samples.
struct Workspace {
    offsets: Vec<usize>,
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(spec: &NetworkSpec) -> Self {
        Self {
            offsets: spec.layer_offsets(),
            acts: spec.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            deltas: spec.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn output(&self) -> &[f64] {
        self.acts.last().expect("at least two layers")
    }

    fn forward(&mut self, spec: &NetworkSpec, params: &[f64], input: &[f64]) {
        self.acts[0].copy_from_slice(input);
        let last = spec.n_weight_layers() - 1;
        for l in 0..spec.n_weight_layers() {
            let (n_in, n_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
            let w = &params[self.offsets[l]..self.offsets[l] + n_out * n_in];
            let b = &params[self.offsets[l] + n_out * n_in..self.offsets[l] + n_out * (n_in + 1)];
            let (prev, rest) = self.acts.split_at_mut(l + 1);
            let a_in = &prev[l];
            let a_out = &mut rest[0];
            for r in 0..n_out {
                let z = dot(&w[r * n_in..(r + 1) * n_in], a_in) + b[r];
                a_out[r] = if l == last { z } else { spec.hidden_activation.apply(z) };
            }
        }
    }

    /// Accumulates this sample's gradient into `grad`; returns its squared error.
    /// Requires a preceding `forward` on the same sample.
    fn backward(&mut self, spec: &NetworkSpec, params: &[f64], target: &[f64], grad: &mut [f64]) -> f64 {
        let n_layers = spec.layer_sizes.len();
        let mut sq = 0.0;
        {
            let out = &self.acts[n_layers - 1];
            let delta = &mut self.deltas[n_layers - 1];
            for ((d, &p), &t) in delta.iter_mut().zip(out).zip(target) {
                let r = p - t;
                sq += r * r;
                *d = 2.0 * r;
            }
        }
        for l in (0..spec.n_weight_layers()).rev() {
            let (n_in, n_out) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
            let off = self.offsets[l];
            let (lower, upper) = self.deltas.split_at_mut(l + 1);
            let delta_out = &upper[0];
            let a_in = &self.acts[l];
            let (gw, rest) = grad[off..off + n_out * (n_in + 1)].split_at_mut(n_out * n_in);
            for r in 0..n_out {
                let d = delta_out[r];
                for (g, &a) in gw[r * n_in..(r + 1) * n_in].iter_mut().zip(a_in) {
                    *g += d * a;
                }
                rest[r] += d;
            }
            if l > 0 {
                let w = &params[off..off + n_out * n_in];
                let delta_in = &mut lower[l];
                delta_in.fill(0.0);
                for r in 0..n_out {
                    let d = delta_out[r];
                    for (di, &wv) in delta_in.iter_mut().zip(&w[r * n_in..(r + 1) * n_in]) {
                        *di += wv * d;
                    }
                }
                for (di, &a) in delta_in.iter_mut().zip(a_in) {
                    *di *= spec.hidden_activation.derivative_from_output(a);
                }
            }
        }
        sq
    }
}
