use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Partition of the sensors into network inputs (fixed) and outputs (moved).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSplit {
    pub fixed_ids: Vec<String>,
    pub moved_ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetMethod {
    /// Caller-supplied fixed ids, kept verbatim.
    Explicit(Vec<String>),
    /// Greedy max-min absolute Pearson correlation coverage.
    GreedyCorrelation,
}

impl SubsetSplit {
    /// Builds a split from explicit fixed ids; the moved ids are the remaining
    /// sensors in dataset order.
    pub fn from_fixed(d: &Dataset, fixed_ids: Vec<String>) -> Result<Self, DataError> {
        let n = d.n_sensors();
        if fixed_ids.is_empty() || fixed_ids.len() >= n {
            return Err(DataError::SubsetSize {
                n_fixed: fixed_ids.len(),
                n_sensors: n,
            });
        }
        let mut is_fixed = vec![false; n];
        for id in &fixed_ids {
            let j = d
                .sensor_index(id)
                .ok_or_else(|| DataError::UnknownSensor(id.clone()))?;
            if std::mem::replace(&mut is_fixed[j], true) {
                return Err(DataError::DuplicateSensor(id.clone()));
            }
        }
        let moved_ids = d
            .sensor_ids()
            .iter()
            .zip(&is_fixed)
            .filter(|(_, &f)| !f)
            .map(|(id, _)| id.clone())
            .collect();
        Ok(Self {
            fixed_ids,
            moved_ids,
        })
    }

    /// Checks the partition invariants against `d`.
    pub fn validate(&self, d: &Dataset) -> Result<(), DataError> {
        let again = Self::from_fixed(d, self.fixed_ids.clone())?;
        let mut a = again.moved_ids;
        let mut b = self.moved_ids.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(DataError::Invalid(
                "moved ids must be exactly the sensors not in the fixed subset".into(),
            ));
        }
        Ok(())
    }
}

pub fn select_subsets(d: &Dataset, n_fixed: usize, method: &SubsetMethod) -> Result<SubsetSplit, DataError> {
    let n = d.n_sensors();
    if n_fixed == 0 || n_fixed >= n {
        return Err(DataError::SubsetSize {
            n_fixed,
            n_sensors: n,
        });
    }
    match method {
        SubsetMethod::Explicit(ids) => {
            if ids.len() != n_fixed {
                return Err(DataError::SubsetSize {
                    n_fixed: ids.len(),
                    n_sensors: n,
                });
            }
            SubsetSplit::from_fixed(d, ids.clone())
        }
        SubsetMethod::GreedyCorrelation => {
            let corr = abs_correlation_matrix(d);
            let picked = greedy_max_min(&corr, n_fixed);
            let ids = picked.iter().map(|&j| d.sensor_ids()[j].clone()).collect();
            SubsetSplit::from_fixed(d, ids)
        }
    }
}

/// Each step picks the candidate that maximizes the worst coverage of the
/// sensors left uncovered, where a sensor's coverage is its largest absolute
/// correlation with any fixed sensor. Ties go to the larger total coverage,
/// then to the lower sensor index.
fn greedy_max_min(corr: &[Vec<f64>], n_fixed: usize) -> Vec<usize> {
    let n = corr.len();
    let mut coverage = vec![0.0f64; n];
    let mut fixed = vec![false; n];
    let mut picked = Vec::with_capacity(n_fixed);
    for _ in 0..n_fixed {
        let mut best: Option<(usize, f64, f64)> = None;
        for cand in (0..n).filter(|&c| !fixed[c]) {
            let mut worst = f64::INFINITY;
            let mut total = 0.0;
            for s in (0..n).filter(|&s| !fixed[s] && s != cand) {
                let c = coverage[s].max(corr[s][cand]);
                worst = worst.min(c);
                total += c;
            }
            let better = match best {
                None => true,
                Some((_, bw, bt)) => worst > bw || (worst == bw && total > bt),
            };
            if better {
                best = Some((cand, worst, total));
            }
        }
        let (cand, _, _) = best.expect("n_fixed < n leaves a candidate");
        fixed[cand] = true;
        picked.push(cand);
        for s in 0..n {
            coverage[s] = coverage[s].max(corr[s][cand]);
        }
    }
    picked
}

/// |Pearson r| for every sensor pair; zero when either column is constant.
pub(crate) fn abs_correlation_matrix(d: &Dataset) -> Vec<Vec<f64>> {
    let n = d.n_sensors();
    let m = d.n_samples() as f64;
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let c = d.readings().column(j);
            let mean = c.iter().sum::<f64>() / m;
            c.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = cols.iter().map(|c| crate::matrix::norm2(c)).collect();
    let mut out = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a..n {
            let r = if norms[a] > 0.0 && norms[b] > 0.0 {
                (crate::matrix::dot(&cols[a], &cols[b]) / (norms[a] * norms[b])).abs().min(1.0)
            } else {
                0.0
            };
            out[a][b] = r;
            out[b][a] = r;
        }
    }
    out
}
