//! Bootstrap calibration of the correction coefficient for an arbitrary
//! initial estimator, here a ridge-style shrinkage of the naive estimate.
//!
//! ```text
//! cargo run --release --example bootstrap_plugin
//! ```

use signal_lab::{algorithm2, gen_dataset, tau_sq_naive, PluginEstimator, Scenario, Selector, WMatrix};

fn main() -> signal_lab::Result<()> {
    let scenario = Scenario::new(200, 60, 1.0, 0.3).with_seed(9);
    let model = scenario.covariate_model();
    let shrunk = PluginEstimator::new("shrunk naive", |s| Ok(0.9 * tau_sq_naive(&WMatrix::new(s))?));
    let naive = PluginEstimator::builtin("naive", &model)?;

    for rep in 0..4 {
        let sample = gen_dataset(&scenario, rep)?;
        for plugin in [&naive, &shrunk] {
            let r = algorithm2(&sample, plugin, &Selector::All, &model, 200, rep as u64)?;
            println!(
                "rep {rep} {:<13} base {:.4}  c~ {:+.5}  Z {:+.4}  corrected {:.4}",
                plugin.name(),
                r.base_estimate,
                r.c_tilde,
                r.z_h,
                r.estimate
            );
        }
    }
    Ok(())
}
