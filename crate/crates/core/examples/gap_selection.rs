//! Largest-gap covariate selection on the estimated squared coefficients,
//! and the improved estimator restricted to the selected subset.
//!
//! ```text
//! cargo run --release --example gap_selection
//! ```

use signal_lab::{algorithm1, beta_sq_hat, gap_select, gen_dataset, Scenario, Selector, WMatrix};

fn main() -> signal_lab::Result<()> {
    let scenario = Scenario::new(1000, 1000, 2.0, 0.9).with_seed(5);
    let model = scenario.covariate_model();
    for rep in 0..5 {
        let sample = gen_dataset(&scenario, rep)?;
        let b = beta_sq_hat(&WMatrix::new(&sample))?;
        let sel = gap_select(b.as_slice())?;
        let gap = sel.diagnostics.as_ref().map_or(0.0, |d| d.gap);
        let est = algorithm1(&sample, &Selector::Gap, &model)?;
        println!(
            "rep {rep}: selected {:?} (gap {gap:.3}); naive {:.3}, improved {:.3}",
            sel.indices,
            est.tau_sq_hat,
            est.tau_sq()
        );
    }
    println!("strong covariates: {:?}", scenario.theta_set);
    Ok(())
}
