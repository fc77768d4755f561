//! `fieldnet`: synthesize sensor fields, train reconstruction networks,
//! cross-validate them and predict readings at uncovered locations.

// Validation is written as `!(x >= bound)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use crate::commands::CliError;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  2  usage error (unknown subcommand or flag)
  3  configuration error (missing, mistyped or out-of-range key)
  4  file error (unreadable input or unwritable output)
  5  data error (malformed CSV, out-of-range reading, unknown sensor)
  6  training or evaluation error";

#[derive(Parser, Debug)]
#[command(name = "fieldnet", version, about, arg_required_else_help = true, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset CSV from a field config (or the reference field).
    Synth {
        #[command(flatten)]
        common: Common,
        /// Field config file (TOML); the built-in 23-sensor reference field when absent.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        noise_sd: Option<f64>,
    },
    /// Train one model and write model.json, trace.csv and held-out predictions.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        optim: OptimArgs,
        /// Fold count of the plan whose first fold is held out.
        #[arg(long)]
        k: Option<usize>,
        /// Train on every sample instead of holding out one fold.
        #[arg(long)]
        no_holdout: bool,
    },
    /// k-fold cross-validation; writes report.json / report.csv.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        optim: OptimArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Cross-validate every (architecture, method) pair over a seed list.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        optim: OptimArgs,
        /// Comma-separated architectures, e.g. 14:11:9,14:13:12:9.
        #[arg(long)]
        presets: Option<String>,
        /// Comma-separated subset of rprop,bfgs,hybrid.
        #[arg(long)]
        methods: Option<String>,
        /// Comma-separated seeds.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        activation: Option<String>,
        /// Run grid cells sequentially.
        #[arg(long)]
        serial: bool,
    },
    /// Reconstruct moved-sensor readings from a saved model and a CSV of fixed readings.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        /// CSV with a timestamp column and (at least) the model's fixed sensors.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Key-value (TOML) config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Report format: json, csv or both.
    #[arg(long)]
    format: Option<String>,
    /// Write 0 for every wall-clock time so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated fixed sensor ids (explicit subset).
    #[arg(long)]
    fixed: Option<String>,
    /// Number of fixed sensors chosen by greedy correlation when --fixed is absent.
    #[arg(long)]
    n_fixed: Option<usize>,
    /// valid-range or per-sensor.
    #[arg(long)]
    normalization: Option<String>,
    /// drop-row or reject.
    #[arg(long)]
    missing: Option<String>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Layer sizes like 14:11:9, a preset name (3-layer, 4-layer, 5-layer) or `pyramid`.
    #[arg(long)]
    layers: Option<String>,
    /// tanh or logistic.
    #[arg(long)]
    activation: Option<String>,
}

#[derive(Args, Debug)]
struct OptimArgs {
    /// rprop, bfgs or hybrid.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    switch_fraction: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
}

#[derive(Default)]
struct Overrides(Table);

impl Overrides {
    fn set(&mut self, key: &str, v: Option<impl Into<Value>>) -> &mut Self {
        if let Some(v) = v {
            self.0.insert(key.to_string(), v.into());
        }
        self
    }

    fn path(&mut self, key: &str, v: Option<PathBuf>) -> &mut Self {
        self.set(key, v.map(|p| p.to_string_lossy().into_owned()))
    }

    fn count(&mut self, key: &str, v: Option<usize>) -> &mut Self {
        self.set(key, v.map(|n| n as i64))
    }

    fn common(&mut self, c: &Common) -> &mut Self {
        self.set("seed", c.seed.map(|s| s as i64))
            .path("out_dir", c.out_dir.clone())
            .set("format", c.format.clone());
        if c.no_timing {
            self.set("timing", Some(false));
        }
        self
    }

    fn data(&mut self, d: &DataArgs) -> &mut Self {
        self.path("dataset", d.dataset.clone())
            .set("fixed", d.fixed.clone())
            .count("n_fixed", d.n_fixed)
            .set("normalization", d.normalization.clone())
            .set("missing", d.missing.clone())
    }

    fn model(&mut self, m: &ModelArgs) -> &mut Self {
        self.set("layers", m.layers.clone()).set("activation", m.activation.clone())
    }

    fn optim(&mut self, o: &OptimArgs) -> &mut Self {
        self.set("method", o.method.clone())
            .count("iterations", o.iterations)
            .set("switch_fraction", o.switch_fraction)
            .set("grad_tol", o.grad_tol)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fieldnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

type Runner = fn(&config::RunConfig) -> Result<(), CliError>;

fn dispatch(command: Command) -> Result<(), CliError> {
    let mut o = Overrides::default();
    let (config_file, run): (Option<PathBuf>, Runner) = match &command {
        Command::Synth {
            common,
            field,
            samples,
            noise_sd,
        } => {
            o.common(common)
                .path("field", field.clone())
                .count("samples", *samples)
                .set("noise_sd", *noise_sd);
            (common.config.clone(), commands::synth)
        }
        Command::Train {
            common,
            data,
            model,
            optim,
            k,
            no_holdout,
        } => {
            o.common(common).data(data).model(model).optim(optim).count("k", *k);
            if *no_holdout {
                o.set("holdout", Some(false));
            }
            (common.config.clone(), commands::train)
        }
        Command::Evaluate {
            common,
            data,
            model,
            optim,
            k,
        } => {
            o.common(common).data(data).model(model).optim(optim).count("k", *k);
            (common.config.clone(), commands::evaluate)
        }
        Command::Compare {
            common,
            data,
            optim,
            presets,
            methods,
            seeds,
            k,
            activation,
            serial,
        } => {
            o.common(common)
                .data(data)
                .optim(optim)
                .set("presets", presets.clone())
                .set("methods", methods.clone())
                .set("seeds", seeds.clone())
                .count("k", *k)
                .set("activation", activation.clone());
            if *serial {
                o.set("parallel", Some(false));
            }
            (common.config.clone(), commands::compare)
        }
        Command::Predict { common, model, input } => {
            o.common(common).path("model", model.clone()).path("input", input.clone());
            (common.config.clone(), commands::predict)
        }
    };
    let cfg = config::validate_config(config_file.as_deref(), &o.0)?;
    run(&cfg)
}
