use std::fmt;
use std::path::{Path, PathBuf};

use fieldnet::evaluation::{
    compare_methods, cross_validate, make_batch, reconstruct, CvSetup, EvalError, TrainedModel,
};
use fieldnet::field_data::{
    fit_normalizer, gen_synthetic, select_subsets, split_kfold, DataError, Dataset, FieldConfig, LoadOptions,
    MissingPolicy, NormStrategy, SubsetMethod, SubsetSplit,
};
use fieldnet::mlp::{build_network, Activation, NetworkSpec};
use fieldnet::optimizers::{train as run_training, Method, TrainConfig};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    File { path: PathBuf, message: String },
    Data(String),
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::File { .. } => 4,
            CliError::Data(_) => 5,
            CliError::Run(_) => 6,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::File { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Data(m) | CliError::Run(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::NotFound(path) => CliError::File {
                path,
                message: "file not found".into(),
            },
            DataError::Io { path, source } => CliError::File {
                path,
                message: source.to_string(),
            },
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Data(d) => d.into(),
            e @ (EvalError::ColumnMismatch { .. } | EvalError::OutOfRange { .. }) => CliError::Data(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<fieldnet::Error> for CliError {
    fn from(e: fieldnet::Error) -> Self {
        match e {
            fieldnet::Error::Data(d) => d.into(),
            fieldnet::Error::Eval(ev) => ev.into(),
            fieldnet::Error::Io { path, source } => CliError::File {
                path,
                message: source.to_string(),
            },
            other => CliError::Run(other.to_string()),
        }
    }
}

fn run_err(e: impl fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

fn config_err(key: &str, e: impl fmt::Display) -> CliError {
    CliError::Config(ConfigError {
        key: key.into(),
        message: e.to_string(),
    })
}

/// Output files are assembled in memory and written together at the end.
#[derive(Default)]
struct Outputs(Vec<(String, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.0.push((name.to_string(), bytes));
    }

    fn add_csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write(&mut buf).map_err(run_err)?;
        self.add(name, buf);
        Ok(())
    }

    fn add_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(run_err)?;
        text.push('\n');
        self.add(name, text.into_bytes());
        Ok(())
    }

    fn write(self, cfg: &RunConfig) -> Result<(), CliError> {
        let dir = &cfg.out_dir;
        let file_err = |path: &Path, e: std::io::Error| CliError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
        for (name, bytes) in self.0.into_iter().chain([("config.echo".to_string(), cfg.to_toml().into_bytes())]) {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| file_err(&path, e))?;
        }
        Ok(())
    }
}

fn wants(cfg: &RunConfig, format: &str) -> bool {
    cfg.format == "both" || cfg.format == format
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let path = cfg.require("dataset", &cfg.dataset)?;
    let opts = LoadOptions {
        missing: missing_policy(cfg),
        min_samples: cfg.min_samples,
        ..LoadOptions::default()
    };
    let (d, report) = Dataset::load_csv(path, &opts)?;
    if report.dropped_rows() > 0 {
        eprintln!(
            "fieldnet: dropped {} row(s) with missing values from {}",
            report.dropped_rows(),
            path.display()
        );
    }
    Ok(d)
}

fn missing_policy(cfg: &RunConfig) -> MissingPolicy {
    match cfg.missing.as_str() {
        "reject" => MissingPolicy::Reject,
        _ => MissingPolicy::DropRow,
    }
}

fn norm_strategy(cfg: &RunConfig) -> NormStrategy {
    match cfg.normalization.as_str() {
        "per-sensor" => NormStrategy::PerSensor,
        _ => NormStrategy::ValidRange,
    }
}

fn make_split(d: &Dataset, cfg: &RunConfig) -> Result<SubsetSplit, CliError> {
    Ok(match &cfg.fixed {
        Some(ids) => select_subsets(d, ids.len(), &SubsetMethod::Explicit(ids.clone()))?,
        None => select_subsets(d, cfg.n_fixed, &SubsetMethod::GreedyCorrelation)?,
    })
}

fn layer_sizes(layers: &str, split: &SubsetSplit, key: &str) -> Result<Vec<usize>, CliError> {
    let (n_in, n_out) = (split.fixed_ids.len(), split.moved_ids.len());
    let sizes = if layers == "pyramid" {
        NetworkSpec::pyramid(n_in, n_out)
    } else {
        NetworkSpec::parse_sizes(layers).map_err(|e| config_err(key, e))?
    };
    if sizes.first() != Some(&n_in) || sizes.last() != Some(&n_out) {
        return Err(config_err(
            key,
            format!("architecture {layers} must start with {n_in} inputs and end with {n_out} outputs"),
        ));
    }
    Ok(sizes)
}

fn make_spec(cfg: &RunConfig, split: &SubsetSplit) -> Result<NetworkSpec, CliError> {
    let activation: Activation = cfg.activation.parse().map_err(|e| config_err("activation", e))?;
    NetworkSpec::new(layer_sizes(&cfg.layers, split, "layers")?, activation, cfg.seed)
        .map_err(|e| config_err("layers", e))
}

fn train_config(cfg: &RunConfig) -> Result<TrainConfig, CliError> {
    Ok(TrainConfig {
        method: cfg.method.parse().map_err(|e| config_err("method", e))?,
        total_iterations: cfg.iterations,
        switch_fraction: cfg.switch_fraction,
        seed: cfg.seed,
        grad_tol: cfg.grad_tol,
        timing: cfg.timing,
        ..TrainConfig::default()
    })
}

pub fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let mut field = match &cfg.field {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::File {
                path: path.clone(),
                message: e.to_string(),
            })?;
            FieldConfig::from_toml_str(&text).map_err(|e| config_err("field", e))?
        }
        None => FieldConfig::reference(cfg.seed, 0.3),
    };
    if let Some(n) = cfg.samples {
        field.samples = n;
    }
    if let Some(sd) = cfg.noise_sd {
        field.noise_sd = sd;
    }
    let d = gen_synthetic(&field).map_err(|e| match e {
        DataError::FieldConfig(m) => config_err("field", m),
        other => other.into(),
    })?;
    let mut out = Outputs::default();
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    out.add("dataset.csv", buf);
    out.add("field.toml", field.to_toml_string().into_bytes());
    out.write(cfg)
}

#[derive(Serialize)]
struct TrainSummary {
    architecture: String,
    fixed_ids: Vec<String>,
    moved_ids: Vec<String>,
    n_train: usize,
    n_test: usize,
    iterations: usize,
    stop: fieldnet::optimizers::StopReason,
    fallback_steps: usize,
    initial_sse: f64,
    final_sse: f64,
    test_abs_error: Option<f64>,
    total_seconds: f64,
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let d = load_dataset(cfg)?;
    let split = make_split(&d, cfg)?;
    let spec = make_spec(cfg, &split)?;
    let tcfg = train_config(cfg)?;

    let (train_rows, test_rows) = if cfg.holdout {
        let plan = split_kfold(d.n_samples(), cfg.k, cfg.seed)?;
        (plan.train_indices(0), plan.test_indices(0))
    } else {
        ((0..d.n_samples()).collect(), Vec::new())
    };
    let train_set = d.select_samples(&train_rows);
    let norm = fit_normalizer(&train_set, norm_strategy(cfg))?;
    let batch = make_batch(&train_set, &split, &norm)?;
    let net = build_network(&spec).map_err(run_err)?;
    let trace = run_training(&net, &batch, &tcfg).map_err(run_err)?;
    let model = TrainedModel::new(trace.network.clone(), &norm, split.clone(), d.valid_range())?;

    let mut out = Outputs::default();
    out.add("model.json", model.to_json()?.into_bytes());
    out.add_csv("trace.csv", |w| trace.write_csv(w))?;

    let mut test_abs_error = None;
    if !test_rows.is_empty() {
        let test_set = d.select_samples(&test_rows);
        let fixed = test_set.select_sensors(&split.fixed_ids)?;
        let recon = reconstruct(&model, fixed.timestamps(), fixed.sensor_ids(), fixed.readings())?;
        let truth = test_set.select_sensors(&split.moved_ids)?;
        test_abs_error = Some(fieldnet::evaluation::abs_error(truth.readings(), &recon.estimates)?);
        out.add_csv("test_predictions.csv", |w| recon.write_csv(w))?;
    }
    out.add_json(
        "summary.json",
        &TrainSummary {
            architecture: spec.to_string(),
            fixed_ids: split.fixed_ids.clone(),
            moved_ids: split.moved_ids.clone(),
            n_train: train_rows.len(),
            n_test: test_rows.len(),
            iterations: trace.records.len() - 1,
            stop: trace.stop,
            fallback_steps: trace.fallback_steps,
            initial_sse: trace.records[0].sse,
            final_sse: trace.final_sse(),
            test_abs_error,
            total_seconds: trace.total_seconds,
        },
    )?;
    out.write(cfg)
}

fn cv_setup(cfg: &RunConfig, spec: NetworkSpec) -> Result<CvSetup, CliError> {
    Ok(CvSetup {
        spec,
        train: train_config(cfg)?,
        k: cfg.k,
        seed: cfg.seed,
        norm: norm_strategy(cfg),
        parallel: cfg.parallel,
    })
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let d = load_dataset(cfg)?;
    let split = make_split(&d, cfg)?;
    let setup = cv_setup(cfg, make_spec(cfg, &split)?)?;
    let report = cross_validate(&d, &split, &setup)?;
    let mut out = Outputs::default();
    if wants(cfg, "json") {
        out.add_json("report.json", &report)?;
    }
    if wants(cfg, "csv") {
        out.add_csv("report.csv", |w| report.write_csv(w))?;
    }
    out.write(cfg)
}

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let d = load_dataset(cfg)?;
    let split = make_split(&d, cfg)?;
    let architectures = cfg
        .presets
        .iter()
        .map(|p| layer_sizes(p, &split, "presets"))
        .collect::<Result<Vec<_>, _>>()?;
    let methods = cfg
        .methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(|e| config_err("methods", e)))
        .collect::<Result<Vec<_>, _>>()?;
    let activation: Activation = cfg.activation.parse().map_err(|e| config_err("activation", e))?;
    let base_spec = NetworkSpec::new(architectures[0].clone(), activation, cfg.seed).map_err(run_err)?;
    let setup = cv_setup(cfg, base_spec)?;
    let table = compare_methods(&d, &split, &architectures, &methods, &setup, &cfg.seeds)?;
    let mut out = Outputs::default();
    if wants(cfg, "json") {
        out.add_json("report.json", &table)?;
    }
    if wants(cfg, "csv") {
        out.add_csv("report.csv", |w| table.write_csv(w))?;
    }
    out.write(cfg)
}

pub fn predict(cfg: &RunConfig) -> Result<(), CliError> {
    let model_path = cfg.require("model", &cfg.model)?;
    let input = cfg.require("input", &cfg.input)?;
    let model = TrainedModel::load(model_path)?;
    let opts = LoadOptions {
        valid_range: model.valid_range,
        missing: missing_policy(cfg),
        min_samples: 1,
    };
    let (d, _) = Dataset::load_csv(input, &opts)?;
    let fixed = d.select_sensors(&model.split.fixed_ids)?;
    let recon = reconstruct(&model, fixed.timestamps(), fixed.sensor_ids(), fixed.readings())?;
    if !recon.clamped.is_empty() {
        eprintln!("fieldnet: clamped {} estimate(s) into the valid range", recon.clamped.len());
    }
    let mut out = Outputs::default();
    out.add_csv("predictions.csv", |w| recon.write_csv(w))?;
    out.write(cfg)
}
