//! Regenerates the n = p = 300 simulation table: naive, T_g and T_h over the
//! (tau², eta) grid, 100 replicates per cell.
//!
//! ```text
//! cargo run --release --example table1 -- [out.csv] [seed]
//! ```

use signal_lab::cli::{parse_config_str, render_results, simulate, Overrides};

fn main() -> signal_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next();
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let config = parse_config_str(
        r#"{
            "grid": {"eta": [0.1, 0.3, 0.5, 0.7, 0.9], "tau_sq": [1, 2], "n": 300, "p": 300, "k": 6},
            "reps": 100,
            "estimators": ["naive", "naive_tg", "naive_th"]
        }"#,
        &Overrides { base_seed: Some(seed), output: out.map(Into::into) },
    )?;
    let start = std::time::Instant::now();
    let rows = simulate(&config)?;
    match &config.output {
        Some(path) => signal_lab::cli::emit_results(&rows, path)?,
        None => print!("{}", render_results(&rows)),
    }
    eprintln!("{} rows in {:.1?}", rows.len(), start.elapsed());
    Ok(())
}
