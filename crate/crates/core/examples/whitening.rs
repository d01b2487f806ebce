//! Whitens correlated Gaussian covariates with their known mean and
//! covariance, then estimates the signal level on the whitened sample.
//!
//! ```text
//! cargo run --release --example whitening
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use signal_lab::rng::stream_rng;
use signal_lab::{algorithm1, whiten, CovariateModel, LabeledSample, Selector};

fn main() -> signal_lab::Result<()> {
    let p = 8;
    let (n, rho) = (400, 0.6_f64);
    let mean = DVector::from_fn(p, |j, _| j as f64);
    let cov = DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs()));
    let model = CovariateModel::gaussian(mean.clone(), cov.clone())?;

    let mut rng = stream_rng(3, 0);
    let x = model.sample_matrix(n, &mut rng);
    // Y depends on the raw covariates through a nonlinear link
    let y = DVector::from_fn(n, |i, _| {
        let a = x[(i, 0)] - mean[0];
        let b = x[(i, 1)] - mean[1];
        a + 0.5 * b + 0.3 * (a * b).tanh() + rng.sample::<f64, _>(StandardNormal)
    });
    let raw = LabeledSample::new(x, y)?;
    let white = whiten(&raw, &mean, &cov)?;

    let m = white.x().row_mean();
    let c = white.x().transpose() * white.x() / n as f64;
    println!("whitened column means: max |mean| = {:.3}", m.amax());
    println!("whitened second moments: max |I - XᵀX/n| = {:.3}", (DMatrix::identity(p, p) - c).amax());

    let white_model = CovariateModel::independent(signal_lab::Marginal::StandardNormal, p);
    let bundle = algorithm1(&white, &Selector::All, &white_model)?;
    println!("tau² naive    = {:.4}", bundle.tau_sq_hat);
    println!("tau² improved = {:.4}", bundle.tau_sq());
    println!("sigma² naive  = {:.4}", bundle.sigma_sq_hat);
    Ok(())
}
