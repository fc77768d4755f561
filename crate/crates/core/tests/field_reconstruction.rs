//! Synthetic field generation and end-to-end reconstruction against closed forms.

use std::f64::consts::PI;

use fieldnet::evaluation::{abs_error, make_batch, reconstruct, TrainedModel};
use fieldnet::field_data::{fit_normalizer, gen_synthetic, Basis, Dataset, FieldConfig, NormStrategy, SubsetSplit};
use fieldnet::mlp::{build_network, sse_loss, Activation, Network, NetworkSpec};
use fieldnet::optimizers::{train, Method, TrainConfig};
use fieldnet::Matrix;

fn small_field(sensors: usize, samples: usize) -> FieldConfig {
    FieldConfig {
        sensors,
        positions: None,
        extent: 100.0,
        samples,
        noise_sd: 0.0,
        seed: 9,
        period: 24.0,
        base: 12.0,
        diurnal_amplitude: 6.0,
        basis: vec![Basis {
            center: [40.0, 60.0],
            length_scale: 40.0,
            weight: 4.0,
            period: 17.0,
            phase: 0.5,
        }],
        valid_range: (-20.0, 60.0),
        start: 0,
        interval_s: 60,
    }
}

/// Independent evaluation of the field formula.
fn field_value(cfg: &FieldConfig, pos: [f64; 2], t: usize) -> f64 {
    let t = t as f64;
    let mut v = cfg.base + cfg.diurnal_amplitude * (2.0 * PI * t / cfg.period).sin();
    for b in &cfg.basis {
        let r2 = (pos[0] - b.center[0]).powi(2) + (pos[1] - b.center[1]).powi(2);
        v += b.weight * (-r2 / b.length_scale.powi(2)).exp() * (2.0 * PI * t / b.period + b.phase).sin();
    }
    v.clamp(cfg.valid_range.0, cfg.valid_range.1)
}

fn ids(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn fit(d: &Dataset, split: &SubsetSplit, sizes: Vec<usize>, method: Method, iterations: usize) -> TrainedModel {
    let norm = fit_normalizer(d, NormStrategy::ValidRange).unwrap();
    let batch = make_batch(d, split, &norm).unwrap();
    let net = build_network(&NetworkSpec::new(sizes, Activation::Tanh, 1).unwrap()).unwrap();
    let cfg = TrainConfig {
        method,
        total_iterations: iterations,
        timing: false,
        ..TrainConfig::default()
    };
    let trace = train(&net, &batch, &cfg).unwrap();
    TrainedModel::new(trace.network, &norm, split.clone(), d.valid_range()).unwrap()
}

#[test]
fn synthetic_matches_independent_closed_form() {
    let cfg = FieldConfig::reference(3, 0.0);
    let d = gen_synthetic(&cfg).unwrap();
    let pos = cfg.resolved_positions();
    assert_eq!((d.n_samples(), d.n_sensors()), (2000, 23));
    for t in (0..2000).step_by(7) {
        for (j, p) in pos.iter().enumerate() {
            let want = field_value(&cfg, *p, t);
            assert!((d.readings()[(t, j)] - want).abs() <= 1e-12, "t={t} sensor={j}");
        }
        assert_eq!(d.timestamps()[t], cfg.start + t as i64 * cfg.interval_s);
    }
}

#[test]
fn noisy_field_is_reproducible_and_centered_on_clean_field() {
    let cfg = FieldConfig::reference(3, 0.3);
    let a = gen_synthetic(&cfg).unwrap();
    let b = gen_synthetic(&cfg).unwrap();
    assert_eq!(a, b);
    let clean = gen_synthetic(&FieldConfig::reference(3, 0.0)).unwrap();
    let diffs: Vec<f64> = a
        .readings()
        .as_slice()
        .iter()
        .zip(clean.readings().as_slice())
        .map(|(x, y)| x - y)
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64).sqrt();
    assert!(mean.abs() < 0.01, "noise mean {mean}");
    assert!((sd - 0.3).abs() < 0.01, "noise sd {sd}");
}

#[test]
fn interpolating_network_reproduces_closed_form() {
    // Six noiseless samples, 26 parameters and per-sensor scaling: BFGS reaches the
    // gradient tolerance at essentially zero SSE, so the reconstructions of those
    // samples recover the field itself.
    let cfg = small_field(4, 6);
    let d = gen_synthetic(&cfg).unwrap();
    let split = SubsetSplit::from_fixed(&d, ids(&["s00", "s01", "s02"])).unwrap();
    let norm = fit_normalizer(&d, NormStrategy::PerSensor).unwrap();
    let batch = make_batch(&d, &split, &norm).unwrap();
    let net = build_network(&NetworkSpec::new(vec![3, 5, 1], Activation::Tanh, 1).unwrap()).unwrap();
    let cfg_train = TrainConfig {
        method: Method::Bfgs,
        total_iterations: 2000,
        timing: false,
        ..TrainConfig::default()
    };
    let trace = train(&net, &batch, &cfg_train).unwrap();
    assert!(trace.stopped_early());
    assert!(trace.final_sse() < 1e-18, "{}", trace.final_sse());
    let model = TrainedModel::new(trace.network, &norm, split.clone(), d.valid_range()).unwrap();

    let fixed = d.select_sensors(&split.fixed_ids).unwrap();
    let rec = reconstruct(&model, fixed.timestamps(), fixed.sensor_ids(), fixed.readings()).unwrap();
    let pos = cfg.resolved_positions();
    assert!(rec.clamped.is_empty());
    for t in 0..6 {
        let want = field_value(&cfg, pos[3], t);
        let got = rec.estimates[(t, 0)];
        assert!((got - want).abs() <= 1e-6, "t={t}: {got} vs {want}");
    }
}

#[test]
fn constant_field_reconstructs_constant() {
    let mut cfg = small_field(5, 40);
    cfg.base = 15.0;
    cfg.diurnal_amplitude = 0.0;
    cfg.basis.clear();
    let d = gen_synthetic(&cfg).unwrap();
    assert!(d.readings().as_slice().iter().all(|&v| v == 15.0));
    let split = SubsetSplit::from_fixed(&d, ids(&["s00", "s01", "s02"])).unwrap();
    let model = fit(&d, &split, vec![3, 4, 2], Method::Hybrid, 50);
    let fixed = d.select_sensors(&split.fixed_ids).unwrap();
    let rec = reconstruct(&model, fixed.timestamps(), fixed.sensor_ids(), fixed.readings()).unwrap();
    assert!(rec.estimates.as_slice().iter().all(|v| (v - 15.0).abs() <= 0.5));
}

#[test]
fn single_row_gives_single_row() {
    let cfg = small_field(4, 30);
    let d = gen_synthetic(&cfg).unwrap();
    let split = SubsetSplit::from_fixed(&d, ids(&["s00", "s02"])).unwrap();
    let model = fit(&d, &split, vec![2, 3, 2], Method::Rprop, 20);
    let row = Matrix::from_rows(&[[14.0, 16.5]]).unwrap();
    let rec = reconstruct(&model, &[42], &split.fixed_ids, &row).unwrap();
    assert_eq!(rec.estimates.rows(), 1);
    assert_eq!(rec.estimates.cols(), 2);
    assert_eq!(rec.sensor_ids, ids(&["s01", "s03"]));
    assert_eq!(rec.timestamps, vec![42]);
}

#[test]
fn reconstruct_rejects_wrong_columns_and_out_of_range() {
    let d = gen_synthetic(&small_field(4, 30)).unwrap();
    let split = SubsetSplit::from_fixed(&d, ids(&["s00", "s02"])).unwrap();
    let model = fit(&d, &split, vec![2, 3, 2], Method::Rprop, 5);
    let row = Matrix::from_rows(&[[14.0, 16.5]]).unwrap();
    assert!(reconstruct(&model, &[0], &ids(&["s02", "s00"]), &row).is_err());
    let hot = Matrix::from_rows(&[[14.0, 99.0]]).unwrap();
    assert!(reconstruct(&model, &[0], &split.fixed_ids, &hot).is_err());
}

/// Rescales the model's normalization and folds the inverse change into the
/// first and last layers, so the Celsius-level function is unchanged.
fn renormalized(model: &TrainedModel, in_factor: f64, in_shift: f64, out_factor: f64, out_shift: f64) -> TrainedModel {
    let spec = model.network.spec().clone();
    let sizes = &spec.layer_sizes;
    let (n_in, n_hidden, n_out) = (sizes[0], sizes[1], sizes[2]);
    let old = &model.norm;
    let n_fixed = n_in;
    let mut norm = old.clone();
    for j in 0..n_fixed {
        norm.scale[j] *= in_factor;
        norm.offset[j] += in_shift;
    }
    for j in n_fixed..n_fixed + n_out {
        norm.scale[j] *= out_factor;
        norm.offset[j] += out_shift;
    }

    let mut p = model.network.flatten();
    // z_old = c z_new + shift / s_old, with c = in_factor.
    let w1 = 0;
    let b1 = n_hidden * n_in;
    for h in 0..n_hidden {
        let mut extra = 0.0;
        for j in 0..n_in {
            let w = p[w1 + h * n_in + j];
            extra += w * in_shift / old.scale[j];
            p[w1 + h * n_in + j] = w * in_factor;
        }
        p[b1 + h] += extra;
    }
    // x = z_old s_old + o_old = z_new s_new + o_new.
    let w2 = b1 + n_hidden;
    let b2 = w2 + n_out * n_hidden;
    for k in 0..n_out {
        let (s_old, s_new) = (old.scale[n_fixed + k], norm.scale[n_fixed + k]);
        for h in 0..n_hidden {
            p[w2 + k * n_hidden + h] *= s_old / s_new;
        }
        p[b2 + k] = (p[b2 + k] * s_old - out_shift) / s_new;
    }
    let net = Network::from_params(&spec, p).unwrap();
    TrainedModel::new(net, &norm, model.split.clone(), model.valid_range).unwrap()
}

#[test]
fn error_is_invariant_under_compensated_renormalization() {
    let d = gen_synthetic(&small_field(5, 60)).unwrap();
    let split = SubsetSplit::from_fixed(&d, ids(&["s00", "s01", "s03"])).unwrap();
    let model = fit(&d, &split, vec![3, 4, 2], Method::Hybrid, 40);
    let fixed = d.select_sensors(&split.fixed_ids).unwrap();
    let truth = d.select_sensors(&split.moved_ids).unwrap();
    let err = |m: &TrainedModel| {
        let rec = reconstruct(m, fixed.timestamps(), fixed.sensor_ids(), fixed.readings()).unwrap();
        abs_error(truth.readings(), &rec.estimates).unwrap()
    };
    let base = err(&model);
    for (a, b, c, e) in [(2.0, 0.0, 1.0, 0.0), (0.5, 3.0, 4.0, -2.0), (1.0, -5.0, 0.25, 7.0)] {
        let other = renormalized(&model, a, b, c, e);
        let got = err(&other);
        assert!((got - base).abs() <= 1e-10, "{base} vs {got}");
    }
}

#[test]
fn model_json_round_trip() {
    let d = gen_synthetic(&small_field(4, 30)).unwrap();
    let split = SubsetSplit::from_fixed(&d, ids(&["s01", "s03"])).unwrap();
    let model = fit(&d, &split, vec![2, 3, 2], Method::Hybrid, 25);
    let json = model.to_json().unwrap();
    let back = TrainedModel::from_json(&json).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.model_id(), model.model_id());
    assert_eq!(back.to_json().unwrap(), json);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    assert_eq!(TrainedModel::load(&path).unwrap(), model);

    let norm = fit_normalizer(&d, NormStrategy::ValidRange).unwrap();
    let batch = make_batch(&d, &split, &norm).unwrap();
    assert_eq!(
        sse_loss(&back.network, &batch).unwrap().to_bits(),
        sse_loss(&model.network, &batch).unwrap().to_bits()
    );
}
