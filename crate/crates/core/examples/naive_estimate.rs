//! Naive signal and noise estimates on one simulated dataset, compared with
//! the population values of the generating model.
//!
//! ```text
//! cargo run --release --example naive_estimate -- [n] [p]
//! ```

use signal_lab::{gen_dataset, EstimateBundle, Scenario};

fn main() -> signal_lab::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let n = args.next().flatten().unwrap_or(300);
    let p = args.next().flatten().unwrap_or(300);
    let scenario = Scenario::new(n, p, 1.5, 0.5).with_seed(7);
    let sample = gen_dataset(&scenario, 0)?;
    let est = EstimateBundle::naive(&sample)?;

    println!("n = {n}, p = {p}");
    println!("{:<10} {:>10} {:>10}", "", "estimate", "truth");
    println!("{:<10} {:>10.4} {:>10.4}", "tau²", est.tau_sq_hat, scenario.tau_sq);
    println!("{:<10} {:>10.4} {:>10.4}", "sigma_Y²", est.sigma_y_sq_hat, scenario.sigma_y_sq());
    println!("{:<10} {:>10.4} {:>10.4}", "sigma²", est.sigma_sq_hat, scenario.sigma_sq());

    let beta = scenario.beta();
    let mut top: Vec<usize> = (0..p).collect();
    top.sort_by(|&a, &b| est.beta_sq_hat[b].total_cmp(&est.beta_sq_hat[a]));
    println!("\nlargest estimated beta_j²:");
    for &j in &top[..8.min(p)] {
        println!("  j = {j:>4}  {:>8.4}  (true {:.4})", est.beta_sq_hat[j], beta[j] * beta[j]);
    }
    Ok(())
}
