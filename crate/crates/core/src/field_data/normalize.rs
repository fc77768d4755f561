use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormStrategy {
    /// Map the dataset's physical valid range onto [-1, 1], same map for every sensor.
    #[default]
    ValidRange,
    /// Map each sensor's observed [min, max] onto [-1, 1].
    PerSensor,
}

/// Per-sensor affine map `z = (x - offset) / scale` from Celsius to normalized units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub sensor_ids: Vec<String>,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

pub fn fit_normalizer(d: &Dataset, strategy: NormStrategy) -> Result<NormParams, DataError> {
    let n = d.n_sensors();
    let (offset, scale) = match strategy {
        NormStrategy::ValidRange => {
            let (lo, hi) = d.valid_range();
            (vec![0.5 * (lo + hi); n], vec![0.5 * (hi - lo); n])
        }
        NormStrategy::PerSensor => {
            let mut offset = Vec::with_capacity(n);
            let mut scale = Vec::with_capacity(n);
            for j in 0..n {
                let col = d.readings().column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !(hi > lo) {
                    return Err(DataError::DegenerateRange(d.sensor_ids()[j].clone()));
                }
                offset.push(0.5 * (lo + hi));
                scale.push(0.5 * (hi - lo));
            }
            (offset, scale)
        }
    };
    Ok(NormParams {
        sensor_ids: d.sensor_ids().to_vec(),
        offset,
        scale,
    })
}

impl NormParams {
    pub fn normalize(&self, sensor: usize, x: f64) -> f64 {
        (x - self.offset[sensor]) / self.scale[sensor]
    }

    pub fn denormalize(&self, sensor: usize, z: f64) -> f64 {
        z * self.scale[sensor] + self.offset[sensor]
    }

    /// Restricts to the named sensors, in the given order.
    pub fn subset(&self, ids: &[String]) -> Result<NormParams, DataError> {
        let mut offset = Vec::with_capacity(ids.len());
        let mut scale = Vec::with_capacity(ids.len());
        for id in ids {
            let j = self
                .sensor_ids
                .iter()
                .position(|s| s == id)
                .ok_or_else(|| DataError::UnknownSensor(id.clone()))?;
            offset.push(self.offset[j]);
            scale.push(self.scale[j]);
        }
        Ok(NormParams {
            sensor_ids: ids.to_vec(),
            offset,
            scale,
        })
    }

    /// Column `j` of `m` is taken to be sensor `j` of these params.
    pub fn normalize_matrix(&self, m: &Matrix) -> Matrix {
        self.map_matrix(m, |j, x| self.normalize(j, x))
    }

    pub fn denormalize_matrix(&self, m: &Matrix) -> Matrix {
        self.map_matrix(m, |j, z| self.denormalize(j, z))
    }

    fn map_matrix(&self, m: &Matrix, f: impl Fn(usize, f64) -> f64) -> Matrix {
        assert_eq!(m.cols(), self.scale.len(), "column count must match sensor count");
        let mut out = m.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = f(j, *v);
            }
        }
        out
    }

    pub(crate) fn validate(&self) -> Result<(), DataError> {
        let n = self.sensor_ids.len();
        if self.offset.len() != n || self.scale.len() != n {
            return Err(DataError::Invalid("normalizer length mismatch".into()));
        }
        for (id, &s) in self.sensor_ids.iter().zip(&self.scale) {
            if !(s > 0.0 && s.is_finite()) {
                return Err(DataError::DegenerateRange(id.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_data::DEFAULT_VALID_RANGE;
    use rand::{Rng, SeedableRng};

    fn ds(cols: &[[f64; 2]]) -> Dataset {
        let m = Matrix::from_rows(cols).unwrap();
        let ts = (0..m.rows() as i64).collect();
        Dataset::new(vec!["a".into(), "b".into()], ts, m, DEFAULT_VALID_RANGE).unwrap()
    }

    #[test]
    fn valid_range_endpoints() {
        let p = fit_normalizer(&ds(&[[0.0, 1.0], [2.0, 3.0]]), NormStrategy::ValidRange).unwrap();
        assert_eq!(p.normalize(0, -20.0), -1.0);
        assert_eq!(p.normalize(1, 60.0), 1.0);
        assert_eq!(p.normalize(0, 20.0), 0.0);
    }

    #[test]
    fn round_trip_random() {
        let p = fit_normalizer(&ds(&[[0.0, 1.0], [2.0, 3.0]]), NormStrategy::PerSensor).unwrap();
        let q = fit_normalizer(&ds(&[[0.0, 1.0], [2.0, 3.0]]), NormStrategy::ValidRange).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-20.0..60.0);
            for params in [&p, &q] {
                for j in 0..2 {
                    let back = params.denormalize(j, params.normalize(j, x));
                    assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let err = fit_normalizer(&ds(&[[5.0, 1.0], [5.0, 3.0]]), NormStrategy::PerSensor).unwrap_err();
        assert!(matches!(err, DataError::DegenerateRange(ref s) if s == "a"));
    }
}
