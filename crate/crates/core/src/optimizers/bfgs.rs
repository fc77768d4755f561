use serde::{Deserialize, Serialize};

use super::{check_finite, Objective, OptimError};
use crate::matrix::{dot, norm2, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub initial_step: f64,
    /// Maximum objective evaluations per search.
    pub max_evals: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            initial_step: 1.0,
            max_evals: 25,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<(), OptimError> {
        if 0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0 && self.initial_step > 0.0 && self.max_evals > 0 {
            Ok(())
        } else {
            Err(OptimError::InvalidConfig(format!("bad line search constants {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub point: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
}

/// Strong-Wolfe line search along descent direction `dir` from `x`
/// (bracketing phase followed by a zoom with safeguarded cubic interpolation).
pub fn line_search(
    obj: &mut dyn Objective,
    x: &[f64],
    value: f64,
    grad: &[f64],
    dir: &[f64],
    params: &LineSearchParams,
) -> Result<LineSearchResult, OptimError> {
    let slope0 = dot(grad, dir);
    if !(slope0 < 0.0) {
        return Err(OptimError::LineSearchFailed { evaluations: 0 });
    }
    let n = x.len();
    let mut point = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut evals = 0usize;
    let armijo = |p: &Probe| p.value > value + params.c1 * p.alpha * slope0;
    let curvature_ok = |p: &Probe| p.slope.abs() <= -params.c2 * slope0;

    let mut probe = |alpha: f64, point: &mut Vec<f64>, g: &mut Vec<f64>, evals: &mut usize| -> Result<Probe, OptimError> {
        for ((p, &xi), &di) in point.iter_mut().zip(x).zip(dir) {
            *p = xi + alpha * di;
        }
        *evals += 1;
        let v = obj.eval(point, g)?;
        let slope = dot(g, dir);
        // Non-finite values are treated as an overshoot.
        let (v, slope) = if v.is_finite() && slope.is_finite() {
            (v, slope)
        } else {
            (f64::INFINITY, f64::NAN)
        };
        Ok(Probe { alpha, value: v, slope })
    };
    let done = |p: Probe, point: Vec<f64>, g: Vec<f64>, evals: usize| LineSearchResult {
        alpha: p.alpha,
        point,
        value: p.value,
        grad: g,
        evaluations: evals,
    };

    let mut prev = Probe {
        alpha: 0.0,
        value,
        slope: slope0,
    };
    let mut alpha = params.initial_step;
    let (mut lo, mut hi);
    loop {
        if evals >= params.max_evals {
            return Err(OptimError::LineSearchFailed { evaluations: evals });
        }
        let cur = probe(alpha, &mut point, &mut g, &mut evals)?;
        if armijo(&cur) || (evals > 1 && cur.value >= prev.value) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature_ok(&cur) {
            return Ok(done(cur, point, g, evals));
        }
        if cur.slope >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        prev = cur;
        alpha *= 2.0;
    }

    loop {
        if evals >= params.max_evals {
            return Err(OptimError::LineSearchFailed { evaluations: evals });
        }
        let alpha = interpolate(lo, hi);
        let cur = probe(alpha, &mut point, &mut g, &mut evals)?;
        if armijo(&cur) || cur.value >= lo.value {
            hi = cur;
        } else {
            if curvature_ok(&cur) {
                return Ok(done(cur, point, g, evals));
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
}

/// Minimizer of the cubic through both probes, kept at least 10% of the
/// bracket width away from either end; bisection when the cubic is unusable.
fn interpolate(a: Probe, b: Probe) -> f64 {
    let (left, right) = if a.alpha < b.alpha { (a.alpha, b.alpha) } else { (b.alpha, a.alpha) };
    let width = right - left;
    let mid = 0.5 * (left + right);
    if !(a.value.is_finite() && b.value.is_finite() && a.slope.is_finite() && b.slope.is_finite()) {
        return mid;
    }
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.slope - a.slope + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
    if !t.is_finite() {
        return mid;
    }
    t.clamp(left + 0.1 * width, right - 0.1 * width)
}

/// Dense inverse-Hessian approximation and the last accepted point.
#[derive(Clone, Debug, PartialEq)]
pub struct BfgsState {
    inv_hessian: Matrix,
    prev_point: Option<Vec<f64>>,
    prev_grad: Option<Vec<f64>>,
    updates: usize,
    skipped_updates: usize,
    line_search: LineSearchParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BfgsStep {
    pub alpha: f64,
    pub evaluations: usize,
    /// Whether the curvature condition allowed an inverse-Hessian update.
    pub updated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BfgsOutcome {
    Step(BfgsStep),
    /// The line search failed; a short gradient step was tried instead and the
    /// inverse Hessian reset to identity.
    Fallback { accepted: bool, evaluations: usize },
}

impl BfgsState {
    pub fn new(n: usize, line_search: LineSearchParams) -> Self {
        Self {
            inv_hessian: Matrix::identity(n),
            prev_point: None,
            prev_grad: None,
            updates: 0,
            skipped_updates: 0,
            line_search,
        }
    }

    pub fn inv_hessian(&self) -> &Matrix {
        &self.inv_hessian
    }

    pub fn prev_point(&self) -> Option<&[f64]> {
        self.prev_point.as_deref()
    }

    pub fn prev_grad(&self) -> Option<&[f64]> {
        self.prev_grad.as_deref()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn skipped_updates(&self) -> usize {
        self.skipped_updates
    }

    pub fn reset(&mut self) {
        self.inv_hessian = Matrix::identity(self.inv_hessian.rows());
        self.updates = 0;
    }

    /// Direction `-H g`; falls back to `-g` (and resets `H`) if that is not a descent direction.
    pub fn direction(&mut self, grad: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; grad.len()];
        self.inv_hessian.mul_vec_into(grad, &mut d);
        d.iter_mut().for_each(|v| *v = -*v);
        if !(dot(&d, grad) < 0.0) {
            self.reset();
            d = grad.iter().map(|g| -g).collect();
        }
        d
    }

    /// One quasi-Newton step from `(x, value, grad)`, updating all three in place.
    ///
    /// On line-search failure the inputs are left untouched and
    /// [`OptimError::LineSearchFailed`] is returned.
    pub fn step(
        &mut self,
        obj: &mut dyn Objective,
        x: &mut Vec<f64>,
        value: &mut f64,
        grad: &mut Vec<f64>,
    ) -> Result<BfgsStep, OptimError> {
        let n = self.inv_hessian.rows();
        for len in [x.len(), grad.len()] {
            if len != n {
                return Err(OptimError::Dimension { expected: n, found: len });
            }
        }
        if !value.is_finite() {
            return Err(OptimError::NonFiniteLoss);
        }
        check_finite(grad)?;
        let dir = self.direction(grad);
        let ls = line_search(obj, x, *value, grad, &dir, &self.line_search)?;

        let s: Vec<f64> = ls.point.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = ls.grad.iter().zip(grad.iter()).map(|(a, b)| a - b).collect();
        let updated = self.update(&s, &y);

        self.prev_point = Some(std::mem::replace(x, ls.point));
        self.prev_grad = Some(std::mem::replace(grad, ls.grad));
        *value = ls.value;
        Ok(BfgsStep {
            alpha: ls.alpha,
            evaluations: ls.evaluations,
            updated,
        })
    }

    /// [`BfgsState::step`], with a gradient step of length `fallback_len` when the
    /// line search fails. The fallback is kept only if it lowers the objective.
    pub fn step_or_fallback(
        &mut self,
        obj: &mut dyn Objective,
        x: &mut Vec<f64>,
        value: &mut f64,
        grad: &mut Vec<f64>,
        fallback_len: f64,
    ) -> Result<BfgsOutcome, OptimError> {
        match self.step(obj, x, value, grad) {
            Ok(step) => Ok(BfgsOutcome::Step(step)),
            Err(OptimError::LineSearchFailed { evaluations }) => {
                self.reset();
                let gnorm = norm2(grad);
                if gnorm == 0.0 {
                    return Ok(BfgsOutcome::Fallback {
                        accepted: false,
                        evaluations,
                    });
                }
                let trial: Vec<f64> = x
                    .iter()
                    .zip(grad.iter())
                    .map(|(xi, gi)| xi - fallback_len * gi / gnorm)
                    .collect();
                let mut g_trial = vec![0.0; trial.len()];
                let v_trial = obj.eval(&trial, &mut g_trial)?;
                let accepted = v_trial.is_finite() && v_trial < *value;
                if accepted {
                    check_finite(&g_trial)?;
                    self.prev_point = Some(std::mem::replace(x, trial));
                    self.prev_grad = Some(std::mem::replace(grad, g_trial));
                    *value = v_trial;
                }
                Ok(BfgsOutcome::Fallback {
                    accepted,
                    evaluations: evaluations + 1,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Rank-two inverse update, skipped unless `sᵀy > 1e-10 ‖s‖‖y‖`.
    fn update(&mut self, s: &[f64], y: &[f64]) -> bool {
        let sy = dot(s, y);
        if !(sy > 1e-10 * norm2(s) * norm2(y)) {
            self.skipped_updates += 1;
            return false;
        }
        let n = s.len();
        if self.updates == 0 {
            // Rescale the identity before the first update so H matches the
            // observed curvature along s.
            let scale = sy / dot(y, y);
            self.inv_hessian = Matrix::identity(n);
            for i in 0..n {
                self.inv_hessian[(i, i)] = scale;
            }
        }
        let rho = 1.0 / sy;
        let mut hy = vec![0.0; n];
        self.inv_hessian.mul_vec_into(y, &mut hy);
        let yhy = dot(y, &hy);
        let coeff = rho * rho * yhy + rho;
        let h = &mut self.inv_hessian;
        for i in 0..n {
            for j in i..n {
                let v = h[(i, j)] - rho * (hy[i] * s[j] + s[i] * hy[j]) + coeff * s[i] * s[j];
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        self.updates += 1;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::FnObjective;

    fn parabola() -> FnObjective<impl FnMut(&[f64], &mut [f64]) -> f64> {
        FnObjective::new(1, |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            (x[0] - 3.0).powi(2)
        })
    }

    #[test]
    fn one_dimensional_quadratic_solved_in_one_step() {
        let mut obj = parabola();
        let mut state = BfgsState::new(1, LineSearchParams::default());
        let mut x = vec![0.0];
        let mut g = vec![0.0];
        let mut v = obj.eval(&x, &mut g).unwrap();
        assert_eq!(state.direction(&g), vec![6.0]);
        let step = state.step(&mut obj, &mut x, &mut v, &mut g).unwrap();
        assert_eq!(x, vec![3.0]);
        assert_eq!(g, vec![0.0]);
        assert_eq!(v, 0.0);
        assert_eq!(step.alpha, 0.5);
        assert_eq!(state.prev_point(), Some(&[0.0][..]));
    }

    #[test]
    fn identity_gives_steepest_descent() {
        let mut state = BfgsState::new(3, LineSearchParams::default());
        assert_eq!(state.direction(&[1.0, -2.0, 0.5]), vec![-1.0, 2.0, -0.5]);
    }

    #[test]
    fn accepted_points_satisfy_strong_wolfe() {
        // Rosenbrock, a few steps from the classic start.
        let mut obj = FnObjective::new(2, |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        });
        let params = LineSearchParams::default();
        let mut state = BfgsState::new(2, params);
        let mut x = vec![-1.2, 1.0];
        let mut g = vec![0.0; 2];
        let mut v = obj.eval(&x, &mut g).unwrap();
        for _ in 0..60 {
            if g.iter().all(|c| c.abs() < 1e-9) {
                break;
            }
            let x0 = x.clone();
            let (v0, g0) = (v, g.clone());
            let d = {
                let mut probe = state.clone();
                probe.direction(&g)
            };
            let step = state.step(&mut obj, &mut x, &mut v, &mut g).unwrap();
            let slope0 = dot(&g0, &d);
            assert!(v <= v0 + params.c1 * step.alpha * slope0);
            assert!(dot(&g, &d).abs() <= -params.c2 * slope0 + 1e-12);
            assert!(state.inv_hessian().max_asymmetry() == 0.0);
            assert_ne!(x, x0);
        }
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn line_search_failure_triggers_fallback() {
        // Gradient points the wrong way: no descent along -g is possible.
        let mut obj = FnObjective::new(1, |x: &[f64], g: &mut [f64]| {
            g[0] = -1.0;
            x[0] * x[0]
        });
        let mut state = BfgsState::new(1, LineSearchParams::default());
        let mut x = vec![1.0];
        let mut g = vec![-1.0];
        let mut v = 1.0;
        let out = state.step_or_fallback(&mut obj, &mut x, &mut v, &mut g, 1e-3).unwrap();
        assert!(matches!(out, BfgsOutcome::Fallback { accepted: false, .. }));
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn curvature_guard_skips_update() {
        let mut state = BfgsState::new(2, LineSearchParams::default());
        assert!(!state.update(&[1.0, 0.0], &[-1.0, 0.0]));
        assert_eq!(state.skipped_updates(), 1);
        assert_eq!(state.inv_hessian(), &Matrix::identity(2));
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut obj = parabola();
        let mut state = BfgsState::new(1, LineSearchParams::default());
        let mut x = vec![0.0];
        let mut g = vec![1.0];
        let mut v = f64::NAN;
        assert_eq!(state.step(&mut obj, &mut x, &mut v, &mut g), Err(OptimError::NonFiniteLoss));
    }
}
