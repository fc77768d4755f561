//! Cross-validation protocol: partitions, determinism, serial/parallel agreement
//! and consistency between the comparison grid and standalone runs.

use fieldnet::evaluation::{compare_methods, cross_validate, derive_seed, CvSetup};
use fieldnet::field_data::{gen_synthetic, split_kfold, Dataset, FieldConfig, NormStrategy, SubsetSplit};
use fieldnet::mlp::{Activation, NetworkSpec};
use fieldnet::optimizers::{Method, TrainConfig};
use proptest::prelude::*;

fn dataset(samples: usize) -> Dataset {
    let mut cfg = FieldConfig::reference(21, 0.2);
    cfg.sensors = 6;
    cfg.samples = samples;
    gen_synthetic(&cfg).unwrap()
}

fn split(d: &Dataset) -> SubsetSplit {
    SubsetSplit::from_fixed(d, vec!["s00".into(), "s02".into(), "s04".into()]).unwrap()
}

fn setup(k: usize, method: Method, parallel: bool) -> CvSetup {
    CvSetup {
        spec: NetworkSpec::new(vec![3, 4, 3], Activation::Tanh, 0).unwrap(),
        train: TrainConfig {
            method,
            total_iterations: 30,
            timing: false,
            ..TrainConfig::default()
        },
        k,
        seed: 17,
        norm: NormStrategy::ValidRange,
        parallel,
    }
}

#[test]
fn five_folds_of_one_hundred() {
    let d = dataset(100);
    let report = cross_validate(&d, &split(&d), &setup(5, Method::Hybrid, false)).unwrap();
    assert_eq!(report.folds.len(), 5);
    for (i, f) in report.folds.iter().enumerate() {
        assert_eq!(f.fold, i);
        assert_eq!((f.n_train, f.n_test), (80, 20));
        assert_eq!(f.init_seed, derive_seed(17, i as u64));
        assert_eq!(f.iterations, 30);
        assert!(f.test_abs_error.is_finite() && f.test_abs_error > 0.0);
    }
    let mean = report.folds.iter().map(|f| f.test_abs_error).sum::<f64>() / 5.0;
    assert!((report.mean_abs_error - mean).abs() < 1e-15);
    assert_eq!(report.n_samples, 100);
}

#[test]
fn reports_are_reproducible_and_independent_of_scheduling() {
    let d = dataset(60);
    let s = split(&d);
    for k in [2, 5, 60] {
        let serial = cross_validate(&d, &s, &setup(k, Method::Hybrid, false)).unwrap();
        let again = cross_validate(&d, &s, &setup(k, Method::Hybrid, false)).unwrap();
        let parallel = cross_validate(&d, &s, &setup(k, Method::Hybrid, true)).unwrap();
        assert_eq!(serial, again);
        assert_eq!(serial.folds, parallel.folds);
        assert_eq!(serial.mean_abs_error.to_bits(), parallel.mean_abs_error.to_bits());
        let total: usize = serial.folds.iter().map(|f| f.n_test).sum();
        assert_eq!(total, 60);
    }
}

#[test]
fn comparison_cells_equal_standalone_runs() {
    let d = dataset(40);
    let s = split(&d);
    let base = setup(4, Method::Hybrid, false);
    let archs = vec![vec![3, 4, 3], vec![3, 5, 4, 3]];
    let table = compare_methods(&d, &s, &archs, &Method::ALL, &base, &[1, 2]).unwrap();
    assert_eq!(table.rows.len(), 6);
    let row = table.row("3:5:4:3", Method::Rprop).unwrap();
    for r in &row.per_seed {
        let mut alone = base.clone();
        alone.spec.layer_sizes = vec![3, 5, 4, 3];
        alone.train.method = Method::Rprop;
        alone.seed = r.seed;
        let rep = cross_validate(&d, &s, &alone).unwrap();
        assert_eq!(rep.mean_abs_error.to_bits(), r.mean_abs_error.to_bits());
    }
    let errs: Vec<f64> = row.per_seed.iter().map(|r| r.mean_abs_error).collect();
    assert!((row.median_abs_error - 0.5 * (errs[0] + errs[1])).abs() < 1e-15);
}

#[test]
fn architecture_must_match_split() {
    let d = dataset(30);
    let mut bad = setup(3, Method::Rprop, false);
    bad.spec = NetworkSpec::new(vec![4, 4, 2], Activation::Tanh, 0).unwrap();
    assert!(cross_validate(&d, &split(&d), &bad).is_err());
}

proptest! {
    #[test]
    fn folds_partition_the_samples(n in 2usize..300, k_pick in 0usize..3, seed in any::<u64>()) {
        let k = [2, 5.min(n), n][k_pick];
        let plan = split_kfold(n, k, seed).unwrap();
        let mut seen = vec![0usize; n];
        for f in 0..k {
            for i in plan.test_indices(f) {
                seen[i] += 1;
            }
            let mut all: Vec<usize> = plan.train_indices(f).into_iter().chain(plan.test_indices(f)).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes = plan.fold_sizes();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        prop_assert_eq!(split_kfold(n, k, seed).unwrap(), plan);
    }
}
