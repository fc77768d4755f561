use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{abs_error, reconstruct, EvalError, TrainedModel};
use crate::field_data::{fit_normalizer, split_kfold, Dataset, NormParams, NormStrategy, SubsetSplit};
use crate::mlp::{build_network, sse_loss, NetworkSpec, SampleBatch};
use crate::optimizers::{train, TrainConfig};

/// Everything a cross-validation run needs besides the data and the split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSetup {
    /// Architecture; `init_seed` is replaced per fold by [`derive_seed`].
    pub spec: NetworkSpec,
    pub train: TrainConfig,
    pub k: usize,
    pub seed: u64,
    pub norm: NormStrategy,
    /// Run folds on the rayon pool. Results are identical either way.
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub init_seed: u64,
    /// Training SSE in normalized units after the last iteration.
    pub train_sse: f64,
    /// Held-out SSE in normalized units.
    pub test_sse: f64,
    /// Held-out mean absolute error in Celsius.
    pub test_abs_error: f64,
    pub iterations: usize,
    pub stopped_early: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldRecord>,
    pub mean_abs_error: f64,
    /// Sample standard deviation of the per-fold errors.
    pub std_abs_error: f64,
    pub total_seconds: f64,
    pub setup: CvSetup,
    pub split: SubsetSplit,
    pub n_samples: usize,
}

/// SplitMix64 finalizer over `(seed, stream)`; used for per-fold init seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Normalized input/target batch for `d`'s samples under `split`.
pub fn make_batch(d: &Dataset, split: &SubsetSplit, norm: &NormParams) -> Result<SampleBatch, EvalError> {
    let fixed = d.sensor_indices(&split.fixed_ids)?;
    let moved = d.sensor_indices(&split.moved_ids)?;
    let inputs = norm.subset(&split.fixed_ids)?.normalize_matrix(&d.readings().select_columns(&fixed));
    let targets = norm.subset(&split.moved_ids)?.normalize_matrix(&d.readings().select_columns(&moved));
    Ok(SampleBatch::new(inputs, targets)?)
}

/// k-fold cross-validation: each fold trains a freshly initialized network on
/// the other folds and is scored on its own samples only.
pub fn cross_validate(d: &Dataset, split: &SubsetSplit, setup: &CvSetup) -> Result<CvReport, EvalError> {
    split.validate(d)?;
    setup.spec.validate()?;
    setup.train.validate()?;
    if setup.spec.n_inputs() != split.fixed_ids.len() || setup.spec.n_outputs() != split.moved_ids.len() {
        return Err(EvalError::InvalidModel(format!(
            "architecture {} does not match {} fixed / {} moved sensors",
            setup.spec,
            split.fixed_ids.len(),
            split.moved_ids.len()
        )));
    }
    let start = Instant::now();
    let plan = split_kfold(d.n_samples(), setup.k, setup.seed)?;
    let run = |fold: usize| {
        run_fold(d, split, setup, &plan.train_indices(fold), &plan.test_indices(fold), fold).map_err(|e| {
            EvalError::Fold {
                fold,
                source: Box::new(e),
            }
        })
    };
    let results: Vec<Result<FoldRecord, EvalError>> = if setup.parallel {
        (0..setup.k).into_par_iter().map(run).collect()
    } else {
        (0..setup.k).map(run).collect()
    };
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let errs: Vec<f64> = folds.iter().map(|f| f.test_abs_error).collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (errs.len() - 1) as f64;
    Ok(CvReport {
        folds,
        mean_abs_error: mean,
        std_abs_error: var.sqrt(),
        total_seconds: if setup.train.timing { start.elapsed().as_secs_f64() } else { 0.0 },
        setup: setup.clone(),
        split: split.clone(),
        n_samples: d.n_samples(),
    })
}

fn run_fold(
    d: &Dataset,
    split: &SubsetSplit,
    setup: &CvSetup,
    train_idx: &[usize],
    test_idx: &[usize],
    fold: usize,
) -> Result<FoldRecord, EvalError> {
    let start = Instant::now();
    let train_set = d.select_samples(train_idx);
    let test_set = d.select_samples(test_idx);
    let norm = fit_normalizer(&train_set, setup.norm)?;

    let init_seed = derive_seed(setup.seed, fold as u64);
    let spec = NetworkSpec {
        init_seed,
        ..setup.spec.clone()
    };
    let net = build_network(&spec)?;
    let trace = train(&net, &make_batch(&train_set, split, &norm)?, &setup.train)?;

    let test_batch = make_batch(&test_set, split, &norm)?;
    let test_sse = sse_loss(&trace.network, &test_batch)?;
    let model = TrainedModel::new(trace.network.clone(), &norm, split.clone(), d.valid_range())?;
    let fixed = test_set.select_sensors(&split.fixed_ids)?;
    let recon = reconstruct(&model, fixed.timestamps(), fixed.sensor_ids(), fixed.readings())?;
    let truth = test_set.select_sensors(&split.moved_ids)?;
    let test_abs_error = abs_error(truth.readings(), &recon.estimates)?;

    Ok(FoldRecord {
        fold,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        init_seed,
        train_sse: trace.final_sse(),
        test_sse,
        test_abs_error,
        iterations: trace.records.len() - 1,
        stopped_early: trace.stopped_early(),
        seconds: if setup.train.timing { start.elapsed().as_secs_f64() } else { 0.0 },
    })
}

impl CvReport {
    /// One row per fold.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "fold",
            "n_train",
            "n_test",
            "init_seed",
            "train_sse",
            "test_sse",
            "test_abs_error",
            "iterations",
            "stopped_early",
            "seconds",
        ])?;
        for f in &self.folds {
            w.write_record([
                f.fold.to_string(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                f.init_seed.to_string(),
                f.train_sse.to_string(),
                f.test_sse.to_string(),
                f.test_abs_error.to_string(),
                f.iterations.to_string(),
                f.stopped_early.to_string(),
                f.seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Copy with every wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> CvReport {
        let mut r = self.clone();
        r.total_seconds = 0.0;
        r.folds.iter_mut().for_each(|f| f.seconds = 0.0);
        r
    }
}
