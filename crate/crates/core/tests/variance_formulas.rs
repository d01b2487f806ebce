use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use signal_lab::covmodel::{population_moments, CovariateModel, Marginal};
use signal_lab::rng::{stream_rng, StreamRng};
use signal_lab::{sigma_sq_hat, sigma_y_sq_hat, tau_sq_naive, var_sigma_hat, var_tau_naive, LabeledSample, WMatrix};

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Skewed covariates and an intercept exercise every term of both formulas;
/// heavy tails need many replicates for a tight comparison.
#[test]
fn exponential_covariates_with_intercept() {
    let p = 6;
    let n = 40;
    let model = CovariateModel::independent(Marginal::CenteredExponential, p);
    let beta = [0.8, -0.5, 0.4, 0.2, 0.0, 0.0];
    let response = |x: &[f64], rng: &mut StreamRng| -> f64 {
        0.7 + x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + rng.sample::<f64, _>(StandardNormal)
    };
    let moments = population_moments(&model, &response, 3_000_000, &[], 12).unwrap();
    let predicted_tau = var_tau_naive(&moments, n).unwrap().variance;
    let predicted_sigma = var_sigma_hat(&moments, n).unwrap().variance;

    let (mut tau, mut sigma) = (Vec::new(), Vec::new());
    for r in 0..40_000u64 {
        let mut rng = stream_rng(88, r);
        let x = model.sample_matrix(n, &mut rng);
        let y = DVector::from_fn(n, |i, _| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            response(&row, &mut rng)
        });
        let s = LabeledSample::new(x, y).unwrap();
        let t = tau_sq_naive(&WMatrix::new(&s)).unwrap();
        tau.push(t);
        sigma.push(sigma_sq_hat(sigma_y_sq_hat(s.y()).unwrap(), t));
    }
    let rel_tau = (variance(&tau) - predicted_tau).abs() / predicted_tau;
    let rel_sigma = (variance(&sigma) - predicted_sigma).abs() / predicted_sigma;
    assert!(rel_tau < 0.05, "Var(tau) formula {predicted_tau} vs {}", variance(&tau));
    assert!(rel_sigma < 0.05, "Var(sigma) formula {predicted_sigma} vs {}", variance(&sigma));
}
