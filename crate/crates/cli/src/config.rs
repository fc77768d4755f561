//! Run configuration: a TOML key-value file merged with command-line overrides.
//!
//! Overrides always win. Every diagnostic names the offending key.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(key: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        key: key.to_string(),
        message: message.into(),
    })
}

/// Fully resolved settings. Serializes back to a config file that reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<String>>,
    pub n_fixed: usize,
    pub layers: String,
    pub presets: Vec<String>,
    pub activation: String,
    pub method: String,
    pub methods: Vec<String>,
    pub iterations: usize,
    pub switch_fraction: f64,
    pub grad_tol: f64,
    pub k: usize,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub normalization: String,
    pub missing: String,
    pub min_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    pub holdout: bool,
    pub timing: bool,
    pub parallel: bool,
    pub format: String,
}

const KEYS: &[&str] = &[
    "dataset",
    "field",
    "model",
    "input",
    "out_dir",
    "fixed",
    "n_fixed",
    "layers",
    "presets",
    "activation",
    "method",
    "methods",
    "iterations",
    "switch_fraction",
    "grad_tol",
    "k",
    "seed",
    "seeds",
    "normalization",
    "missing",
    "min_samples",
    "samples",
    "noise_sd",
    "holdout",
    "timing",
    "parallel",
    "format",
];

/// Reads `file` (if any), applies `overrides` on top and validates the result.
pub fn validate_config(file: Option<&Path>, overrides: &Table) -> Result<RunConfig, ConfigError> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                key: "config".into(),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            text.parse::<Table>().map_err(|e| ConfigError {
                key: "config".into(),
                message: format!("{} is not a valid key-value file: {e}", path.display()),
            })?
        }
        None => Table::new(),
    };
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    resolve(&table)
}

fn resolve(t: &Table) -> Result<RunConfig, ConfigError> {
    if let Some(unknown) = t.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return err(unknown, "unknown key");
    }
    let seed = get_u64(t, "seed")?.unwrap_or(0);
    let cfg = RunConfig {
        dataset: get_str(t, "dataset")?.map(PathBuf::from),
        field: get_str(t, "field")?.map(PathBuf::from),
        model: get_str(t, "model")?.map(PathBuf::from),
        input: get_str(t, "input")?.map(PathBuf::from),
        out_dir: get_str(t, "out_dir")?.map_or_else(|| PathBuf::from("out"), PathBuf::from),
        fixed: get_str_list(t, "fixed")?,
        n_fixed: get_usize(t, "n_fixed")?.unwrap_or(14),
        layers: get_str(t, "layers")?.unwrap_or_else(|| "pyramid".into()),
        presets: get_str_list(t, "presets")?
            .unwrap_or_else(|| ["14:11:9", "14:13:12:9", "14:13:12:11:9"].map(String::from).to_vec()),
        activation: one_of(t, "activation", &["tanh", "logistic"], "tanh")?,
        method: one_of(t, "method", &["rprop", "bfgs", "hybrid"], "hybrid")?,
        methods: get_str_list(t, "methods")?.unwrap_or_else(|| ["rprop", "bfgs", "hybrid"].map(String::from).to_vec()),
        iterations: get_usize(t, "iterations")?.unwrap_or(1000),
        switch_fraction: get_f64(t, "switch_fraction")?.unwrap_or(0.1),
        grad_tol: get_f64(t, "grad_tol")?.unwrap_or(1e-10),
        k: get_usize(t, "k")?.unwrap_or(5),
        seed,
        seeds: get_u64_list(t, "seeds")?.unwrap_or_else(|| vec![seed]),
        normalization: one_of(t, "normalization", &["valid-range", "per-sensor"], "valid-range")?,
        missing: one_of(t, "missing", &["drop-row", "reject"], "drop-row")?,
        min_samples: get_usize(t, "min_samples")?.unwrap_or(10),
        samples: get_usize(t, "samples")?,
        noise_sd: get_f64(t, "noise_sd")?,
        holdout: get_bool(t, "holdout")?.unwrap_or(true),
        timing: get_bool(t, "timing")?.unwrap_or(true),
        parallel: get_bool(t, "parallel")?.unwrap_or(true),
        format: one_of(t, "format", &["json", "csv", "both"], "both")?,
    };

    if !(0.0..=1.0).contains(&cfg.switch_fraction) {
        return err("switch_fraction", format!("must lie in [0, 1], got {}", cfg.switch_fraction));
    }
    if cfg.iterations == 0 {
        return err("iterations", "must be at least 1");
    }
    if cfg.k < 2 {
        return err("k", format!("must be at least 2, got {}", cfg.k));
    }
    if cfg.n_fixed == 0 {
        return err("n_fixed", "must be at least 1");
    }
    if !(cfg.grad_tol >= 0.0) {
        return err("grad_tol", format!("must be non-negative, got {}", cfg.grad_tol));
    }
    if let Some(sd) = cfg.noise_sd {
        if !(sd >= 0.0) {
            return err("noise_sd", format!("must be non-negative, got {sd}"));
        }
    }
    if cfg.samples == Some(0) {
        return err("samples", "must be positive");
    }
    if cfg.seeds.is_empty() {
        return err("seeds", "must not be empty");
    }
    if let Some(bad) = cfg.methods.iter().find(|m| !["rprop", "bfgs", "hybrid"].contains(&m.as_str())) {
        return err("methods", format!("unknown method {bad:?}"));
    }
    if cfg.fixed.as_ref().is_some_and(Vec::is_empty) {
        return err("fixed", "must name at least one sensor");
    }
    Ok(cfg)
}

impl RunConfig {
    /// Path that must be set for a command, or a diagnostic naming its key.
    pub fn require<'a>(&self, key: &str, value: &'a Option<PathBuf>) -> Result<&'a Path, ConfigError> {
        value.as_deref().ok_or_else(|| ConfigError {
            key: key.into(),
            message: "required for this command".into(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

fn type_err<T>(key: &str, expected: &str, v: &Value) -> Result<T, ConfigError> {
    err(key, format!("expected {expected}, found {}", v.type_str()))
}

fn get_str(t: &Table, key: &str) -> Result<Option<String>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(v) => type_err(key, "a string", v),
    }
}

fn get_bool(t: &Table, key: &str) -> Result<Option<bool>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Boolean(b)) => Ok(Some(*b)),
        Some(v) => type_err(key, "a boolean", v),
    }
}

fn get_u64(t: &Table, key: &str) -> Result<Option<u64>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
        Some(Value::Integer(i)) => err(key, format!("must be non-negative, got {i}")),
        Some(v) => type_err(key, "an integer", v),
    }
}

fn get_usize(t: &Table, key: &str) -> Result<Option<usize>, ConfigError> {
    Ok(get_u64(t, key)?.map(|v| v as usize))
}

fn get_f64(t: &Table, key: &str) -> Result<Option<f64>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(f)) => Ok(Some(*f)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(v) => type_err(key, "a number", v),
    }
}

/// Array of strings, or a single comma-separated string.
fn get_str_list(t: &Table, key: &str) -> Result<Option<Vec<String>>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(split_list(s))),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                other => type_err(key, "an array of strings", other),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        Some(v) => type_err(key, "an array of strings", v),
    }
}

fn get_u64_list(t: &Table, key: &str) -> Result<Option<Vec<u64>>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => split_list(s)
            .iter()
            .map(|p| p.parse::<u64>().or_else(|_| err(key, format!("bad seed {p:?}"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                other => type_err(key, "an array of non-negative integers", other),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        Some(v) => type_err(key, "an array of integers", v),
    }
}

fn one_of(t: &Table, key: &str, allowed: &[&str], default: &str) -> Result<String, ConfigError> {
    let v = get_str(t, key)?.unwrap_or_else(|| default.to_string());
    if allowed.contains(&v.as_str()) {
        Ok(v)
    } else {
        err(key, format!("must be one of {}, got {v:?}", allowed.join(", ")))
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect()
}
