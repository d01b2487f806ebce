//! Variance reduction with the zero-mean statistic over all covariates:
//! naive, estimated-coefficient and exact-coefficient estimators over
//! repeated datasets.
//!
//! ```text
//! cargo run --release --example zero_estimator
//! ```

use signal_lab::sim::{run_study, EstimatorKind};
use signal_lab::{Scenario, Selector, SuiteEntry};

fn main() -> signal_lab::Result<()> {
    let suite = vec![
        SuiteEntry::new("naive", EstimatorKind::Naive),
        SuiteEntry::new("estimated c", EstimatorKind::Improved(Selector::All)),
        SuiteEntry::new("exact c", EstimatorKind::Oracle(Selector::All)),
    ];
    println!("{:>5} {:>5} {:<12} {:>8} {:>8} {:>8}", "eta", "tau²", "estimator", "bias", "rmse", "change");
    for eta in [0.1, 0.5, 0.9] {
        let scenario = Scenario::new(200, 200, 2.0, eta).with_reps(200).with_seed(11);
        for row in run_study(&scenario, &suite)? {
            println!(
                "{:>5} {:>5} {:<12} {:>8.4} {:>8.4} {:>7.1}%",
                row.eta, row.tau_sq, row.estimator, row.bias, row.rmse, row.pct_change
            );
        }
    }
    Ok(())
}
