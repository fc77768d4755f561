use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NetworkError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Logistic,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation value `a = apply(z)`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
        }
    }
}

impl FromStr for Activation {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "logistic" | "sigmoid" => Ok(Activation::Logistic),
            other => Err(NetworkError::InvalidSpec(format!("unknown activation {other:?}"))),
        }
    }
}

/// The three architectures compared in the original experiment, named by
/// layer count (input layer included).
pub const TABLE_PRESETS: [(&str, &[usize]); 3] = [
    ("3-layer", &[14, 11, 9]),
    ("4-layer", &[14, 13, 12, 9]),
    ("5-layer", &[14, 13, 12, 11, 9]),
];

/// Layer sizes (input first, output last), hidden activation and init seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    #[serde(default)]
    pub hidden_activation: Activation,
    #[serde(default)]
    pub init_seed: u64,
}

impl NetworkSpec {
    pub fn new(layer_sizes: Vec<usize>, hidden_activation: Activation, init_seed: u64) -> Result<Self, NetworkError> {
        let spec = Self {
            layer_sizes,
            hidden_activation,
            init_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `"14:11:9"` or a preset name such as `"3-layer"`.
    pub fn parse_sizes(s: &str) -> Result<Vec<usize>, NetworkError> {
        if let Some((_, sizes)) = TABLE_PRESETS.iter().find(|(name, _)| *name == s) {
            return Ok(sizes.to_vec());
        }
        s.split(':')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| NetworkError::InvalidSpec(format!("bad layer size {part:?} in {s:?}")))
            })
            .collect()
    }

    /// One hidden layer of size ⌊(inputs + outputs) / 2⌋.
    pub fn pyramid(inputs: usize, outputs: usize) -> Vec<usize> {
        vec![inputs, (inputs + outputs) / 2, outputs]
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.layer_sizes.len() < 2 {
            return Err(NetworkError::InvalidSpec(format!(
                "need at least input and output layers, got {} layer(s)",
                self.layer_sizes.len()
            )));
        }
        if let Some(pos) = self.layer_sizes.iter().position(|&s| s == 0) {
            return Err(NetworkError::InvalidSpec(format!("layer {pos} has size 0")));
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    /// Number of weight layers (layer count minus the input layer).
    pub fn n_weight_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// P = Σ_l size_l · (size_{l-1} + 1).
    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Offset of layer `l`'s weights (l counts weight layers from 0) in the flat vector.
    pub(crate) fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.n_weight_layers());
        let mut at = 0;
        for w in self.layer_sizes.windows(2) {
            offsets.push(at);
            at += w[1] * (w[0] + 1);
        }
        offsets
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layer_sizes.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(":"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_count_3_layer() {
        let spec = NetworkSpec::new(vec![14, 11, 9], Activation::Tanh, 0).unwrap();
        assert_eq!(spec.param_count(), 14 * 11 + 11 + 11 * 9 + 9);
        assert_eq!(spec.param_count(), 273);
    }

    #[test]
    fn pyramid_matches_3_layer_preset() {
        assert_eq!(NetworkSpec::pyramid(14, 9), vec![14, 11, 9]);
        assert_eq!(NetworkSpec::parse_sizes("3-layer").unwrap(), vec![14, 11, 9]);
    }

    #[test]
    fn parse_and_display() {
        let sizes = NetworkSpec::parse_sizes("14:13:12:11:9").unwrap();
        let spec = NetworkSpec::new(sizes, Activation::Tanh, 1).unwrap();
        assert_eq!(spec.to_string(), "14:13:12:11:9");
        assert!(NetworkSpec::parse_sizes("14:x:9").is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(NetworkSpec::new(vec![3], Activation::Tanh, 0).is_err());
        assert!(NetworkSpec::new(vec![3, 0, 1], Activation::Tanh, 0).is_err());
    }
}
