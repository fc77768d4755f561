use super::EvalError;
use crate::matrix::Matrix;

/// Mean absolute difference over all `m × q` entries, in the units of the inputs.
pub fn abs_error(targets: &Matrix, preds: &Matrix) -> Result<f64, EvalError> {
    if targets.rows() != preds.rows() || targets.cols() != preds.cols() {
        return Err(EvalError::Shape {
            target_rows: targets.rows(),
            target_cols: targets.cols(),
            pred_rows: preds.rows(),
            pred_cols: preds.cols(),
        });
    }
    let cols = targets.cols().max(1);
    for (k, (&t, &p)) in targets.as_slice().iter().zip(preds.as_slice()).enumerate() {
        if !(t.is_finite() && p.is_finite()) {
            return Err(EvalError::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
    }
    let n = targets.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = targets
        .as_slice()
        .iter()
        .zip(preds.as_slice())
        .map(|(t, p)| (t - p).abs())
        .sum();
    Ok(total / n as f64)
}
