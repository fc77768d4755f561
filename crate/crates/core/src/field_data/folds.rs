use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;

/// Assignment of every sample to exactly one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

/// Seeded random permutation of `0..n_samples`, cut into `k` contiguous chunks
/// whose sizes differ by at most one (the first `n % k` folds get the extra sample).
pub fn split_kfold(n_samples: usize, k: usize, seed: u64) -> Result<FoldPlan, DataError> {
    if k < 2 || k > n_samples {
        return Err(DataError::FoldCount { k, n: n_samples });
    }
    let mut perm: Vec<usize> = (0..n_samples).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let base = n_samples / k;
    let extra = n_samples % k;
    let mut assignment = vec![0; n_samples];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &sample in &perm[pos..pos + size] {
            assignment[sample] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
    })
}

impl FoldPlan {
    pub fn n_samples(&self) -> usize {
        self.assignment.len()
    }

    /// Held-out sample indices of `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f == fold)
    }

    /// Training sample indices for `fold` (every other fold), ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    fn indices_where(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| pred(f))
            .map(|(i, _)| i)
            .collect()
    }
}
