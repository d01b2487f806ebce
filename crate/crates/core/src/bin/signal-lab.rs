use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use signal_lab::cli::{self, EstimateOptions, Overrides};
use signal_lab::{verify, Error, Selector};

#[derive(Parser)]
#[command(name = "signal-lab", version, about = "Signal and noise level estimation with zero-estimator variance reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorArg {
    Gap,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate tau^2 and sigma^2 on a `y,x1,...,xp` CSV file
    Estimate {
        #[arg(long)]
        data: PathBuf,
        /// Covariate mean, one value per covariate
        #[arg(long, requires = "sigma")]
        mu: Option<PathBuf>,
        /// Covariate covariance, one row per line
        #[arg(long, requires = "mu")]
        sigma: Option<PathBuf>,
        /// Treat the covariates as already whitened
        #[arg(long, conflicts_with_all = ["mu", "sigma"])]
        assume_whitened: bool,
        #[arg(long, value_enum, default_value = "gap")]
        selector: SelectorArg,
    },
    /// Run a simulation grid from a JSON config
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in property checks
    Verify {
        #[arg(long)]
        quick: bool,
    },
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    if let Some(threads) = std::env::var("SIGNAL_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match Cli::parse().command {
        Command::Estimate { data, mu, sigma, assume_whitened, selector } => {
            let selector = match selector {
                SelectorArg::Gap => Selector::Gap,
                SelectorArg::All => Selector::All,
            };
            let opts = EstimateOptions { data, mu, sigma, assume_whitened, selector };
            match cli::estimate(&opts) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Simulate { config, seed, out } => {
            let overrides = Overrides { base_seed: seed, output: out };
            let run = cli::parse_config(&config, &overrides).and_then(|c| {
                let rows = cli::simulate(&c)?;
                match &c.output {
                    Some(path) => cli::emit_results(&rows, path),
                    None => {
                        print!("{}", cli::render_results(&rows));
                        Ok(())
                    }
                }
            });
            match run {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Verify { quick } => {
            let outcomes = verify::run(quick);
            let mut ok = true;
            for c in &outcomes {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
    }
}
