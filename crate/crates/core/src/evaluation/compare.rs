use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cross_validate, CvSetup, EvalError};
use crate::field_data::{Dataset, SubsetSplit};
use crate::mlp::NetworkSpec;
use crate::optimizers::Method;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub mean_abs_error: f64,
    pub seconds: f64,
}

/// One (method, architecture) cell aggregated over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub architecture: String,
    pub method: Method,
    pub per_seed: Vec<SeedResult>,
    pub mean_abs_error: f64,
    pub median_abs_error: f64,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub base: CvSetup,
    pub seeds: Vec<u64>,
}

/// Cross-validates every (architecture, method) pair for every seed.
///
/// Each cell is exactly `cross_validate` with the base setup's layer sizes,
/// method and seed replaced. Rows are ordered architecture-major.
pub fn compare_methods(
    d: &Dataset,
    split: &SubsetSplit,
    architectures: &[Vec<usize>],
    methods: &[Method],
    base: &CvSetup,
    seeds: &[u64],
) -> Result<ComparisonTable, EvalError> {
    if seeds.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    let mut cells = Vec::new();
    for arch in architectures {
        for &method in methods {
            for &seed in seeds {
                cells.push((arch, method, seed));
            }
        }
    }
    let run = |&(arch, method, seed): &(&Vec<usize>, Method, u64)| {
        let mut setup = base.clone();
        setup.spec = NetworkSpec {
            layer_sizes: arch.clone(),
            ..base.spec.clone()
        };
        setup.train.method = method;
        setup.seed = seed;
        setup.parallel = false;
        cross_validate(d, split, &setup)
    };
    let reports: Vec<_> = if base.parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    };
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;

    let rows = reports
        .chunks(seeds.len())
        .zip(cells.chunks(seeds.len()))
        .map(|(group, cell)| {
            let per_seed: Vec<SeedResult> = group
                .iter()
                .map(|r| SeedResult {
                    seed: r.setup.seed,
                    mean_abs_error: r.mean_abs_error,
                    seconds: r.total_seconds,
                })
                .collect();
            let errs: Vec<f64> = per_seed.iter().map(|s| s.mean_abs_error).collect();
            let n = per_seed.len() as f64;
            ComparisonRow {
                architecture: cell[0].0.iter().map(usize::to_string).collect::<Vec<_>>().join(":"),
                method: cell[0].1,
                mean_abs_error: errs.iter().sum::<f64>() / n,
                median_abs_error: median(&errs),
                mean_seconds: per_seed.iter().map(|s| s.seconds).sum::<f64>() / n,
                per_seed,
            }
        })
        .collect();
    Ok(ComparisonTable {
        rows,
        base: base.clone(),
        seeds: seeds.to_vec(),
    })
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl ComparisonTable {
    pub fn row(&self, architecture: &str, method: Method) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.architecture == architecture && r.method == method)
    }

    /// One row per (architecture, method) cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "architecture",
            "method",
            "seeds",
            "mean_abs_error",
            "median_abs_error",
            "mean_seconds",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.architecture.clone(),
                r.method.name().to_string(),
                r.per_seed.len().to_string(),
                r.mean_abs_error.to_string(),
                r.median_abs_error.to_string(),
                r.mean_seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
