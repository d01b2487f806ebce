//! Closed-form variances of the naive estimators against a Monte-Carlo
//! check, with population moments computed by simulation.
//!
//! ```text
//! cargo run --release --example variance_formulas
//! ```

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use signal_lab::covmodel::population_moments;
use signal_lab::rng::{stream_rng, StreamRng};
use signal_lab::{
    sigma_sq_hat, sigma_y_sq_hat, tau_sq_naive, var_sigma_hat, var_tau_naive, CovariateModel, LabeledSample, Marginal,
    WMatrix,
};

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn main() -> signal_lab::Result<()> {
    let (n, p, reps) = (60, 12, 4000);
    let model = CovariateModel::independent(Marginal::CenteredExponential, p);
    // a response that is not linear in X
    let law = |x: &[f64], rng: &mut StreamRng| -> f64 {
        0.8 * x[0] + 0.5 * x[1].sin() + 0.4 * x[2] * x[3] + 0.3 * x[4].abs() + rng.sample::<f64, _>(StandardNormal)
    };
    let moments = population_moments(&model, &law, 1_000_000, &[], 1)?;
    let vt = var_tau_naive(&moments, n)?;
    let vs = var_sigma_hat(&moments, n)?;
    println!("tau² = {:.4}, sigma² = {:.4}", moments.tau_sq(), moments.sigma_sq());
    println!("zeta1 = {:.4}, zeta2 = {:.4}", vt.zeta1, vt.zeta2);

    let (mut tau, mut sigma) = (Vec::new(), Vec::new());
    for r in 0..reps {
        let mut rng = stream_rng(2, r);
        let x = model.sample_matrix(n, &mut rng);
        let y = DVector::from_fn(n, |i, _| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            law(&row, &mut rng)
        });
        let s = LabeledSample::new(x, y)?;
        let t = tau_sq_naive(&WMatrix::new(&s))?;
        tau.push(t);
        sigma.push(sigma_sq_hat(sigma_y_sq_hat(s.y())?, t));
    }
    println!("\n{:<12} {:>10} {:>10}", "", "formula", "empirical");
    println!("{:<12} {:>10.5} {:>10.5}", "Var(tau²)", vt.variance, variance(&tau));
    println!("{:<12} {:>10.5} {:>10.5}", "Var(sigma²)", vs.variance, variance(&sigma));
    Ok(())
}
