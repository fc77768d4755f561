use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{EvalError, TrainedModel};
use crate::matrix::Matrix;

/// Estimated moved-sensor readings in Celsius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub timestamps: Vec<i64>,
    pub sensor_ids: Vec<String>,
    pub estimates: Matrix,
    /// `(row, column)` of every estimate clamped into the valid range.
    pub clamped: Vec<(usize, usize)>,
    pub model_id: String,
    pub fixed_ids: Vec<String>,
}

/// normalize → forward → denormalize, clamping estimates into the model's valid range.
///
/// `column_ids` must equal the model's fixed sensors, in order.
pub fn reconstruct(
    model: &TrainedModel,
    timestamps: &[i64],
    column_ids: &[String],
    fixed_readings: &Matrix,
) -> Result<Reconstruction, EvalError> {
    if column_ids != model.split.fixed_ids.as_slice() || fixed_readings.cols() != column_ids.len() {
        return Err(EvalError::ColumnMismatch {
            expected: model.split.fixed_ids.clone(),
            found: column_ids.to_vec(),
        });
    }
    if timestamps.len() != fixed_readings.rows() {
        return Err(EvalError::TimestampCount {
            rows: timestamps.len(),
            readings: fixed_readings.rows(),
        });
    }
    let (lo, hi) = model.valid_range;
    for (i, row) in fixed_readings.iter_rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(EvalError::OutOfRange {
                    row: i,
                    sensor: column_ids[j].clone(),
                    value: v,
                    min: lo,
                    max: hi,
                });
            }
        }
    }
    let inputs = model.fixed_norm().normalize_matrix(fixed_readings);
    let outputs = model.network.predict(&inputs)?;
    let mut estimates = model.moved_norm().denormalize_matrix(&outputs);
    let mut clamped = Vec::new();
    for i in 0..estimates.rows() {
        for (j, v) in estimates.row_mut(i).iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(EvalError::NonFinite { row: i, col: j });
            }
            if *v < lo || *v > hi {
                *v = v.clamp(lo, hi);
                clamped.push((i, j));
            }
        }
    }
    Ok(Reconstruction {
        timestamps: timestamps.to_vec(),
        sensor_ids: model.split.moved_ids.clone(),
        estimates,
        clamped,
        model_id: model.model_id(),
        fixed_ids: model.split.fixed_ids.clone(),
    })
}

impl Reconstruction {
    /// `timestamp,<moved ids...>,clamped` where `clamped` counts clamped cells in the row.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut per_row = vec![0usize; self.estimates.rows()];
        for &(i, _) in &self.clamped {
            per_row[i] += 1;
        }
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = std::iter::once("timestamp")
            .chain(self.sensor_ids.iter().map(String::as_str))
            .chain(std::iter::once("clamped"))
            .collect();
        w.write_record(&header)?;
        for (i, row) in self.estimates.iter_rows().enumerate() {
            let mut cells = Vec::with_capacity(row.len() + 2);
            cells.push(self.timestamps[i].to_string());
            cells.extend(row.iter().map(f64::to_string));
            cells.push(per_row[i].to_string());
            w.write_record(&cells)?;
        }
        w.flush()?;
        Ok(())
    }
}
