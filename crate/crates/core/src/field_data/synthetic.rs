use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, DEFAULT_VALID_RANGE};
use crate::matrix::Matrix;

/// One spatially localized oscillating component of the synthetic field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Basis {
    pub center: [f64; 2],
    pub length_scale: f64,
    pub weight: f64,
    /// Period in samples.
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Synthetic meteorological field:
///
/// ```text
/// x(s, t) = base + diurnal_amplitude * sin(2π t / period)
///         + Σ_b weight_b * exp(-|pos_s - center_b|² / length_scale_b²) * sin(2π t / period_b + phase_b)
///         + N(0, noise_sd²)
/// ```
///
/// clamped to `valid_range`, with `t` the sample index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub sensors: usize,
    /// Sensor positions; drawn uniformly in `[0, extent]²` from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_extent")]
    pub extent: f64,
    pub samples: usize,
    #[serde(default)]
    pub noise_sd: f64,
    pub seed: u64,
    /// Diurnal period in samples.
    pub period: f64,
    #[serde(default = "default_base")]
    pub base: f64,
    #[serde(default = "default_diurnal")]
    pub diurnal_amplitude: f64,
    #[serde(default)]
    pub basis: Vec<Basis>,
    #[serde(default = "default_range")]
    pub valid_range: (f64, f64),
    #[serde(default = "default_start")]
    pub start: i64,
    #[serde(default = "default_interval")]
    pub interval_s: i64,
}

fn default_extent() -> f64 {
    100.0
}
fn default_base() -> f64 {
    15.0
}
fn default_diurnal() -> f64 {
    8.0
}
fn default_range() -> (f64, f64) {
    DEFAULT_VALID_RANGE
}
fn default_start() -> i64 {
    1_200_000_000
}
fn default_interval() -> i64 {
    600
}

impl FieldConfig {
    /// 23 sensors, 2000 ten-minute samples, four localized components.
    pub fn reference(seed: u64, noise_sd: f64) -> Self {
        let basis = [
            ([20.0, 30.0], 35.0, 5.0, 37.0, 0.3),
            ([70.0, 20.0], 45.0, 4.0, 61.0, 1.1),
            ([50.0, 80.0], 30.0, 6.0, 97.0, 2.0),
            ([85.0, 75.0], 50.0, 3.0, 233.0, 4.2),
        ]
        .into_iter()
        .map(|(center, length_scale, weight, period, phase)| Basis {
            center,
            length_scale,
            weight,
            period,
            phase,
        })
        .collect();
        Self {
            sensors: 23,
            positions: None,
            extent: default_extent(),
            samples: 2000,
            noise_sd,
            seed,
            period: 144.0,
            base: default_base(),
            diurnal_amplitude: default_diurnal(),
            basis,
            valid_range: DEFAULT_VALID_RANGE,
            start: default_start(),
            interval_s: default_interval(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, DataError> {
        toml::from_str(s).map_err(|e| DataError::FieldConfig(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("field config serializes")
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::FieldConfig(m));
        if self.sensors == 0 {
            return bad("sensors must be positive".into());
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be non-negative, got {}", self.noise_sd));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period must be positive, got {}", self.period));
        }
        if !(self.extent > 0.0) {
            return bad(format!("extent must be positive, got {}", self.extent));
        }
        if self.interval_s <= 0 {
            return bad(format!("interval_s must be positive, got {}", self.interval_s));
        }
        let (lo, hi) = self.valid_range;
        if !(lo < hi) {
            return bad(format!("valid_range [{lo}, {hi}] is empty"));
        }
        if let Some(p) = &self.positions {
            if p.len() != self.sensors {
                return bad(format!("{} positions for {} sensors", p.len(), self.sensors));
            }
        }
        for (i, b) in self.basis.iter().enumerate() {
            if !(b.length_scale > 0.0 && b.length_scale.is_finite()) {
                return bad(format!("basis {i}: length_scale must be positive, got {}", b.length_scale));
            }
            if !(b.period > 0.0 && b.period.is_finite()) {
                return bad(format!("basis {i}: period must be positive, got {}", b.period));
            }
        }
        Ok(())
    }

    pub fn sensor_ids(&self) -> Vec<String> {
        (0..self.sensors).map(|j| format!("s{j:02}")).collect()
    }

    /// Explicit positions, or the seeded uniform draw.
    pub fn resolved_positions(&self) -> Vec<[f64; 2]> {
        match &self.positions {
            Some(p) => p.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(1);
                (0..self.sensors)
                    .map(|_| {
                        [
                            rng.random_range(0.0..self.extent),
                            rng.random_range(0.0..self.extent),
                        ]
                    })
                    .collect()
            }
        }
    }

    /// Noise-free, unclamped field value at `pos` and sample index `t`.
    pub fn clean_value(&self, pos: [f64; 2], t: usize) -> f64 {
        let t = t as f64;
        let mut v = self.base + self.diurnal_amplitude * (TAU * t / self.period).sin();
        for b in &self.basis {
            let dx = pos[0] - b.center[0];
            let dy = pos[1] - b.center[1];
            let spatial = (-(dx * dx + dy * dy) / (b.length_scale * b.length_scale)).exp();
            v += b.weight * spatial * (TAU * t / b.period + b.phase).sin();
        }
        v
    }
}

pub fn gen_synthetic(cfg: &FieldConfig) -> Result<Dataset, DataError> {
    cfg.validate()?;
    let positions = cfg.resolved_positions();
    let (lo, hi) = cfg.valid_range;
    let noise = if cfg.noise_sd > 0.0 {
        Some(Normal::new(0.0, cfg.noise_sd).map_err(|e| DataError::FieldConfig(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);

    let mut readings = Matrix::zeros(cfg.samples, cfg.sensors);
    for t in 0..cfg.samples {
        let row = readings.row_mut(t);
        for (v, &pos) in row.iter_mut().zip(&positions) {
            let mut x = cfg.clean_value(pos, t);
            if let Some(n) = &noise {
                x += n.sample(&mut rng);
            }
            *v = x.clamp(lo, hi);
        }
    }
    let timestamps = (0..cfg.samples as i64)
        .map(|t| cfg.start + t * cfg.interval_s)
        .collect();
    Dataset::new(cfg.sensor_ids(), timestamps, readings, cfg.valid_range)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_basis() -> FieldConfig {
        FieldConfig {
            sensors: 2,
            positions: Some(vec![[10.0, 10.0], [40.0, 10.0]]),
            samples: 50,
            noise_sd: 0.0,
            diurnal_amplitude: 0.0,
            basis: vec![Basis {
                center: [10.0, 10.0],
                length_scale: 20.0,
                weight: 7.0,
                period: 12.0,
                phase: 0.0,
            }],
            ..FieldConfig::reference(3, 0.0)
        }
    }

    #[test]
    fn sensor_at_basis_center_is_pure_sinusoid() {
        let cfg = single_basis();
        let d = gen_synthetic(&cfg).unwrap();
        for t in 0..cfg.samples {
            let expected = 15.0 + 7.0 * (TAU * t as f64 / 12.0).sin();
            assert_eq!(d.readings()[(t, 0)], expected);
        }
    }

    #[test]
    fn colocated_sensors_have_identical_columns() {
        let mut cfg = FieldConfig::reference(5, 0.0);
        cfg.sensors = 3;
        cfg.positions = Some(vec![[30.0, 60.0], [30.0, 60.0], [1.0, 2.0]]);
        let d = gen_synthetic(&cfg).unwrap();
        assert_eq!(d.readings().column(0), d.readings().column(1));
        assert_ne!(d.readings().column(0), d.readings().column(2));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = FieldConfig::reference(9, 0.4);
        assert_eq!(gen_synthetic(&cfg).unwrap(), gen_synthetic(&cfg).unwrap());
        let other = FieldConfig::reference(10, 0.4);
        assert_ne!(gen_synthetic(&cfg).unwrap(), gen_synthetic(&other).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let mut c = single_basis();
        c.sensors = 0;
        c.positions = None;
        assert!(gen_synthetic(&c).is_err());
        let mut c = single_basis();
        c.samples = 0;
        assert!(gen_synthetic(&c).is_err());
        let mut c = single_basis();
        c.basis[0].length_scale = 0.0;
        assert!(matches!(gen_synthetic(&c), Err(DataError::FieldConfig(m)) if m.contains("length_scale")));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = single_basis();
        let back = FieldConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        let minimal = "sensors = 4\nsamples = 20\nseed = 1\nperiod = 24.0\n\
                       [[basis]]\ncenter = [1.0, 2.0]\nlength_scale = 5.0\nweight = 1.0\nperiod = 7.0\n";
        let parsed = FieldConfig::from_toml_str(minimal).unwrap();
        assert_eq!(parsed.basis.len(), 1);
        assert_eq!(gen_synthetic(&parsed).unwrap().n_sensors(), 4);
        assert!(FieldConfig::from_toml_str("sensors = 4\nbogus = 1\n").is_err());
    }
}
