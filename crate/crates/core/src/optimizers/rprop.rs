use serde::{Deserialize, Serialize};

use super::{check_finite, OptimError};

/// Step-size adaptation constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpropParams {
    /// Factor applied on a gradient sign flip, in (0, 1).
    pub eta_minus: f64,
    /// Factor applied while the gradient sign persists, > 1.
    pub eta_plus: f64,
    pub delta_init: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for RpropParams {
    fn default() -> Self {
        Self {
            eta_minus: 0.6,
            eta_plus: 1.2,
            delta_init: 0.1,
            delta_min: 1e-6,
            delta_max: 50.0,
        }
    }
}

impl RpropParams {
    pub fn validate(&self) -> Result<(), OptimError> {
        let ok = self.eta_minus > 0.0
            && self.eta_minus < 1.0
            && self.eta_plus > 1.0
            && self.delta_min > 0.0
            && self.delta_min <= self.delta_init
            && self.delta_init <= self.delta_max
            && self.delta_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(OptimError::InvalidConfig(format!("bad rprop constants {self:?}")))
        }
    }
}

/// Per-parameter step sizes and last gradient for iRprop⁻.
#[derive(Clone, Debug, PartialEq)]
pub struct RpropState {
    params: RpropParams,
    step_sizes: Vec<f64>,
    prev_grad: Vec<f64>,
}

impl RpropState {
    pub fn new(n: usize, params: RpropParams) -> Self {
        Self {
            step_sizes: vec![params.delta_init; n],
            prev_grad: vec![0.0; n],
            params,
        }
    }

    /// State with explicit step sizes and previous gradient, clamped into bounds.
    pub fn with_history(params: RpropParams, step_sizes: Vec<f64>, prev_grad: Vec<f64>) -> Self {
        let step_sizes = step_sizes
            .into_iter()
            .map(|d| d.clamp(params.delta_min, params.delta_max))
            .collect();
        Self {
            params,
            step_sizes,
            prev_grad,
        }
    }

    pub fn params(&self) -> &RpropParams {
        &self.params
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    pub fn prev_grad(&self) -> &[f64] {
        &self.prev_grad
    }

    /// One iRprop⁻ update of `x` in place.
    ///
    /// Same sign as last time grows the step by `eta_plus`; a sign flip shrinks it
    /// by `eta_minus`, skips this component's move and forgets the stored gradient.
    pub fn step(&mut self, x: &mut [f64], grad: &[f64]) -> Result<(), OptimError> {
        let n = self.step_sizes.len();
        for len in [x.len(), grad.len()] {
            if len != n {
                return Err(OptimError::Dimension { expected: n, found: len });
            }
        }
        check_finite(grad)?;
        let p = self.params;
        for i in 0..n {
            let g = grad[i];
            let trend = g * self.prev_grad[i];
            if trend > 0.0 {
                self.step_sizes[i] = (self.step_sizes[i] * p.eta_plus).min(p.delta_max);
            } else if trend < 0.0 {
                self.step_sizes[i] = (self.step_sizes[i] * p.eta_minus).max(p.delta_min);
                self.prev_grad[i] = 0.0;
                continue;
            }
            if g > 0.0 {
                x[i] -= self.step_sizes[i];
            } else if g < 0.0 {
                x[i] += self.step_sizes[i];
            }
            self.prev_grad[i] = g;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(delta: f64, prev: f64) -> RpropState {
        RpropState::with_history(RpropParams::default(), vec![delta], vec![prev])
    }

    #[test]
    fn persistent_sign_grows_step() {
        let mut s = state(0.1, 1.0);
        let mut x = [5.0];
        s.step(&mut x, &[1.0]).unwrap();
        assert!((s.step_sizes()[0] - 0.12).abs() < 1e-15);
        assert!((x[0] - (5.0 - 0.12)).abs() < 1e-15);
    }

    #[test]
    fn sign_flip_shrinks_and_suppresses() {
        let mut s = state(0.1, -1.0);
        let mut x = [5.0];
        s.step(&mut x, &[1.0]).unwrap();
        assert!((s.step_sizes()[0] - 0.06).abs() < 1e-15);
        assert_eq!(x[0], 5.0);
        assert_eq!(s.prev_grad()[0], 0.0);
        // Next step with the same sign moves by the reduced step without growing it.
        s.step(&mut x, &[1.0]).unwrap();
        assert!((x[0] - (5.0 - 0.06)).abs() < 1e-15);
        assert!((s.step_sizes()[0] - 0.06).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_everything() {
        let mut s = state(0.1, 1.0);
        let mut x = [5.0];
        s.step(&mut x, &[0.0]).unwrap();
        assert_eq!(s.step_sizes()[0], 0.1);
        assert_eq!(x[0], 5.0);
    }

    #[test]
    fn bounds_respected() {
        let mut s = state(49.0, 1.0);
        let mut x = [0.0];
        s.step(&mut x, &[1.0]).unwrap();
        assert_eq!(s.step_sizes()[0], 50.0);
        let mut s = state(1.2e-6, -1.0);
        s.step(&mut x, &[1.0]).unwrap();
        assert_eq!(s.step_sizes()[0], 1e-6);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut s = RpropState::new(2, RpropParams::default());
        let mut x = [0.0, 0.0];
        assert_eq!(s.step(&mut x, &[0.0, f64::NAN]), Err(OptimError::NonFiniteGradient(1)));
        assert!(s.step(&mut x, &[0.0]).is_err());
    }
}
