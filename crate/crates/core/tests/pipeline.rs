use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use signal_lab::covmodel::OracleSettings;
use signal_lab::rng::{stream_rng, StreamRng};
use signal_lab::{
    algorithm1, algorithm2, gen_dataset, whiten, CovariateModel, LabeledSample, Marginal, PluginEstimator, Scenario,
    Selector,
};

fn correlated_sample(n: usize, seed: u64) -> (LabeledSample, CovariateModel) {
    let mean = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]);
    let cov = DMatrix::from_row_slice(4, 4, &[
        2.0, 0.6, 0.0, 0.1, //
        0.6, 1.0, 0.3, 0.0, //
        0.0, 0.3, 1.5, 0.4, //
        0.1, 0.0, 0.4, 0.8,
    ]);
    let model = CovariateModel::gaussian(mean, cov).unwrap();
    let mut rng = stream_rng(seed, 0);
    let x = model.sample_matrix(n, &mut rng);
    let y = DVector::from_fn(n, |i, _| x[(i, 0)] - 0.5 * x[(i, 2)] + rng.sample::<f64, _>(StandardNormal));
    (LabeledSample::new(x, y).unwrap(), model)
}

#[test]
fn whiten_agrees_with_model_whitener_and_inverts() {
    let (raw, model) = correlated_sample(50, 1);
    let white = whiten(&raw, model.mean(), model.covariance()).unwrap();
    let direct = model.whitener().apply(raw.x()).unwrap();
    assert!((white.x() - &direct).amax() < 1e-12);
    assert_eq!(white.y(), raw.y());
    let back = model.whitener().invert(white.x()).unwrap();
    assert!((back - raw.x()).amax() < 1e-10);
}

#[test]
fn whitened_gaussian_sample_has_identity_second_moments() {
    let (raw, model) = correlated_sample(20_000, 2);
    let white = whiten(&raw, model.mean(), model.covariance()).unwrap();
    let c = white.x().transpose() * white.x() / 20_000.0;
    assert!((c - DMatrix::<f64>::identity(4, 4)).amax() < 0.05);
}

#[test]
fn constant_plugin_gets_no_correction() {
    let s = Scenario::new(60, 20, 1.0, 0.5).with_k(3).with_seed(3);
    let sample = gen_dataset(&s, 0).unwrap();
    let model = s.covariate_model();
    let constant = PluginEstimator::new("constant", |_| Ok(0.75));
    let r = algorithm2(&sample, &constant, &Selector::All, &model, 50, 9).unwrap();
    assert_eq!(r.cov_hat, 0.0);
    assert_eq!(r.estimate, 0.75);
    assert!(r.skipped.is_empty());
}

#[test]
fn failing_plugin_is_an_error_when_most_replicates_fail() {
    let s = Scenario::new(40, 10, 1.0, 0.5).with_k(2).with_seed(4);
    let sample = gen_dataset(&s, 0).unwrap();
    let model = s.covariate_model();
    let original = sample.clone();
    let picky = PluginEstimator::new("picky", move |b| {
        if *b == original {
            Ok(1.0)
        } else {
            Err(signal_lab::Error::Moment("refuses resamples".into()))
        }
    });
    assert!(algorithm2(&sample, &picky, &Selector::All, &model, 20, 1).is_err());
}

#[test]
fn bootstrap_is_reproducible_for_a_seed() {
    let s = Scenario::new(80, 15, 1.0, 0.5).with_k(3).with_seed(5);
    let sample = gen_dataset(&s, 1).unwrap();
    let model = s.covariate_model();
    let naive = PluginEstimator::builtin("naive", &model).unwrap();
    let a = algorithm2(&sample, &naive, &Selector::All, &model, 40, 17).unwrap();
    let b = algorithm2(&sample, &naive, &Selector::All, &model, 40, 17).unwrap();
    assert_eq!(a.estimate, b.estimate);
}

#[test]
fn empirical_law_gets_a_simulated_var_g() {
    let p = 5;
    let sampler = Arc::new(|rng: &mut StreamRng, out: &mut [f64]| {
        for v in out.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
    });
    let model = CovariateModel::empirical(sampler, DVector::zeros(p), DMatrix::identity(p, p))
        .unwrap()
        .with_oracle(OracleSettings { draws: 200_000, seed: 1 });
    let v = model.var_g(&[0, 1, 2, 3]).unwrap();
    let se = v.std_error.unwrap();
    assert!((v.value - 6.0).abs() < 4.0 * se, "{} ± {se}", v.value);

    let exact = CovariateModel::independent(Marginal::StandardNormal, p).var_g(&[0, 1, 2, 3]).unwrap();
    assert_eq!(exact.value, 6.0);
    assert!(exact.std_error.is_none());
}

#[test]
fn single_selected_covariate_falls_back_to_naive() {
    // one dominant coefficient: the largest gap isolates it
    let n = 300;
    let mut rng = stream_rng(6, 0);
    let x = DMatrix::from_fn(n, 10, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |i, _| 3.0 * x[(i, 4)] + 0.1 * rng.sample::<f64, _>(StandardNormal));
    let sample = LabeledSample::new(x, y).unwrap();
    let model = CovariateModel::independent(Marginal::StandardNormal, 10);
    let b = algorithm1(&sample, &Selector::Gap, &model).unwrap();
    let zero = b.zero.as_ref().unwrap();
    assert_eq!(zero.subset, vec![4]);
    assert!(zero.no_zero_estimator);
    assert_eq!(b.tau_sq(), b.tau_sq_hat);
}
