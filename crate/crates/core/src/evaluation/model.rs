use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::field_data::{NormParams, SubsetSplit};
use crate::mlp::{Network, NetworkSpec};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Everything needed to turn fixed-sensor readings into moved-sensor estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub network: Network,
    /// Normalization for the fixed sensors followed by the moved sensors.
    pub norm: NormParams,
    pub split: SubsetSplit,
    pub valid_range: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    model_id: String,
    spec: NetworkSpec,
    params: Vec<f64>,
    normalization: NormParams,
    split: SubsetSplit,
    valid_range: (f64, f64),
}

impl TrainedModel {
    pub fn new(network: Network, norm: &NormParams, split: SubsetSplit, valid_range: (f64, f64)) -> Result<Self, EvalError> {
        let ids: Vec<String> = split.fixed_ids.iter().chain(&split.moved_ids).cloned().collect();
        let model = Self {
            network,
            norm: norm.subset(&ids)?,
            split,
            valid_range,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), EvalError> {
        let spec = self.network.spec();
        let bad = |m: String| Err(EvalError::InvalidModel(m));
        if spec.n_inputs() != self.split.fixed_ids.len() {
            return bad(format!(
                "network has {} inputs but {} fixed sensors",
                spec.n_inputs(),
                self.split.fixed_ids.len()
            ));
        }
        if spec.n_outputs() != self.split.moved_ids.len() {
            return bad(format!(
                "network has {} outputs but {} moved sensors",
                spec.n_outputs(),
                self.split.moved_ids.len()
            ));
        }
        let ids: Vec<&String> = self.split.fixed_ids.iter().chain(&self.split.moved_ids).collect();
        if self.norm.sensor_ids.iter().collect::<Vec<_>>() != ids {
            return bad("normalization sensors must be the fixed then moved sensors".into());
        }
        self.norm.validate()?;
        Ok(())
    }

    pub fn fixed_norm(&self) -> NormParams {
        self.norm.subset(&self.split.fixed_ids).expect("validated")
    }

    pub fn moved_norm(&self) -> NormParams {
        self.norm.subset(&self.split.moved_ids).expect("validated")
    }

    /// Stable 64-bit FNV-1a digest of the architecture and parameter bits, hex encoded.
    pub fn model_id(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.network.spec().to_string().as_bytes());
        for p in self.network.params() {
            feed(&p.to_bits().to_le_bytes());
        }
        for id in self.split.fixed_ids.iter().chain(&self.split.moved_ids) {
            feed(id.as_bytes());
            feed(&[0]);
        }
        format!("{h:016x}")
    }

    pub fn to_json(&self) -> Result<String, EvalError> {
        let doc = ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            model_id: self.model_id(),
            spec: self.network.spec().clone(),
            params: self.network.params().to_vec(),
            normalization: self.norm.clone(),
            split: self.split.clone(),
            valid_range: self.valid_range,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self, EvalError> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(EvalError::ModelVersion(doc.format_version));
        }
        let model = Self {
            network: Network::from_params(&doc.spec, doc.params)?,
            norm: doc.normalization,
            split: doc.split,
            valid_range: doc.valid_range,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> crate::Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| crate::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(Self::from_json(&text)?)
    }
}
