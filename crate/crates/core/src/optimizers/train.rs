use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    BfgsOutcome, BfgsState, LineSearchParams, Objective, OptimError, RpropParams, RpropState, SseObjective,
};
use crate::matrix::norm_inf;
use crate::mlp::{Network, SampleBatch};

/// Length of the gradient step taken when a BFGS line search fails.
const FALLBACK_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rprop,
    Bfgs,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rprop, Method::Bfgs, Method::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rprop => "rprop",
            Method::Bfgs => "bfgs",
            Method::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rprop" => Ok(Method::Rprop),
            "bfgs" => Ok(Method::Bfgs),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(OptimError::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Optimizer that produced a trace record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Rprop,
    Bfgs,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Rprop => "rprop",
            Phase::Bfgs => "bfgs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub total_iterations: usize,
    /// Fraction of iterations run as Rprop before switching to BFGS (hybrid only).
    pub switch_fraction: f64,
    pub seed: u64,
    /// Stop once the gradient infinity-norm drops below this.
    pub grad_tol: f64,
    #[serde(default)]
    pub rprop: RpropParams,
    #[serde(default)]
    pub line_search: LineSearchParams,
    /// Record wall-clock times; when off every elapsed time is written as 0
    /// so traces are byte-reproducible.
    #[serde(default = "yes")]
    pub timing: bool,
}

fn yes() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Hybrid,
            total_iterations: 1000,
            switch_fraction: 0.1,
            seed: 0,
            grad_tol: 1e-10,
            rprop: RpropParams::default(),
            line_search: LineSearchParams::default(),
            timing: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.total_iterations == 0 {
            return Err(OptimError::InvalidConfig("total_iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.switch_fraction) {
            return Err(OptimError::InvalidConfig(format!(
                "switch_fraction must lie in [0, 1], got {}",
                self.switch_fraction
            )));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(OptimError::InvalidConfig(format!("grad_tol must be >= 0, got {}", self.grad_tol)));
        }
        self.rprop.validate()?;
        self.line_search.validate()
    }

    /// Number of leading Rprop iterations: ⌈switch_fraction · total⌉ for the hybrid.
    pub fn rprop_iterations(&self) -> usize {
        match self.method {
            Method::Rprop => self.total_iterations,
            Method::Bfgs => 0,
            Method::Hybrid => {
                let raw = self.switch_fraction * self.total_iterations as f64;
                // Absorb representation error such as 0.1 * 300 = 30.000000000000004.
                ((raw - 1e-9).ceil().max(0.0) as usize).min(self.total_iterations)
            }
        }
    }

    /// Label of trace record `iteration`; record 0 carries the first phase.
    pub fn phase_of(&self, iteration: usize) -> Phase {
        let n_rprop = self.rprop_iterations();
        if n_rprop > 0 && iteration <= n_rprop {
            Phase::Rprop
        } else {
            Phase::Bfgs
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub method: Phase,
    pub sse: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Ran every configured iteration.
    Completed,
    /// Gradient infinity-norm fell below the tolerance.
    GradientTolerance,
}

/// Loss history of one training run. Record 0 holds the initial loss and is
/// labeled with the first phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub network: Network,
    pub total_seconds: f64,
    pub stop: StopReason,
    /// BFGS iterations that fell back to a plain gradient step.
    pub fallback_steps: usize,
}

impl TrainTrace {
    pub fn stopped_early(&self) -> bool {
        self.stop != StopReason::Completed
    }

    pub fn final_sse(&self) -> f64 {
        self.records.last().expect("initial record always present").sse
    }

    /// `iteration,method,sse,elapsed_s`, one row per record.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iteration", "method", "sse", "elapsed_s"])?;
        for r in &self.records {
            w.write_record([
                r.iteration.to_string(),
                r.method.name().to_string(),
                r.sse.to_string(),
                r.elapsed_s.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full-batch training of `net` on `batch`.
///
/// Each iteration spends one gradient evaluation (plus line-search
/// evaluations for BFGS). Rprop runs first for [`TrainConfig::rprop_iterations`]
/// iterations, BFGS for the rest, starting from an identity inverse Hessian.
pub fn train(net: &Network, batch: &SampleBatch, cfg: &TrainConfig) -> Result<TrainTrace, OptimError> {
    cfg.validate()?;
    let spec = net.spec().clone();
    let mut obj = SseObjective { spec: &spec, batch };
    let n = obj.dim();
    let start = Instant::now();
    let elapsed = || if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };

    let mut x = net.flatten();
    let mut grad = vec![0.0; n];
    let mut value = obj.eval(&x, &mut grad)?;
    if !value.is_finite() {
        return Err(OptimError::NonFiniteLoss);
    }

    let mut records = Vec::with_capacity(cfg.total_iterations + 1);
    records.push(TraceRecord {
        iteration: 0,
        method: cfg.phase_of(0),
        sse: value,
        elapsed_s: elapsed(),
    });

    let mut rprop = RpropState::new(n, cfg.rprop);
    let mut bfgs: Option<BfgsState> = None;
    let mut fallback_steps = 0;
    let mut stop = StopReason::Completed;

    for it in 1..=cfg.total_iterations {
        if norm_inf(&grad) < cfg.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        let phase = cfg.phase_of(it);
        match phase {
            Phase::Rprop => {
                rprop.step(&mut x, &grad)?;
                value = obj.eval(&x, &mut grad)?;
                if !value.is_finite() {
                    return Err(OptimError::NonFiniteLoss);
                }
                super::check_finite(&grad)?;
            }
            Phase::Bfgs => {
                let state = bfgs.get_or_insert_with(|| BfgsState::new(n, cfg.line_search));
                if let BfgsOutcome::Fallback { .. } =
                    state.step_or_fallback(&mut obj, &mut x, &mut value, &mut grad, FALLBACK_STEP)?
                {
                    fallback_steps += 1;
                }
            }
        }
        records.push(TraceRecord {
            iteration: it,
            method: phase,
            sse: value,
            elapsed_s: elapsed(),
        });
    }

    let network = Network::from_params(&spec, x)?;
    Ok(TrainTrace {
        records,
        network,
        total_seconds: elapsed(),
        stop,
        fallback_steps,
    })
}
