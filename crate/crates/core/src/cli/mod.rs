//! Front-end operations behind the `signal-lab` binary: config parsing,
//! CSV ingestion, study execution and result rendering.

pub mod config;
pub mod io;

use std::path::PathBuf;

pub use config::{parse_config, parse_config_str, Mode, Overrides, RunConfig};
pub use io::{emit_results, format_sig6, ingest_csv, render_results, write_sample_csv};

use crate::covmodel::{whiten, CovariateModel, Marginal};
use crate::error::{Error, Result};
use crate::select::Selector;
use crate::sim::{run_study, MetricsRow};
use crate::ustat::EstimateBundle;
use crate::zeroest::algorithm1;

/// Inputs of the `estimate` command.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub data: PathBuf,
    pub mu: Option<PathBuf>,
    pub sigma: Option<PathBuf>,
    pub assume_whitened: bool,
    pub selector: Selector,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EstimateReport {
    pub n: usize,
    pub p: usize,
    pub whitening: &'static str,
    pub selector: &'static str,
    pub estimate: EstimateBundle,
}

/// Estimates `τ²` and `σ²` on a user CSV.
///
/// The covariate law must be supplied as a mean and covariance (the data are
/// whitened with them, and whitened coordinates are treated as independent,
/// which is exact for Gaussian covariates), or the caller must assert that
/// the file is already whitened.
pub fn estimate(opts: &EstimateOptions) -> Result<EstimateReport> {
    let raw = ingest_csv(&opts.data)?;
    let p = raw.p();
    let (sample, whitening) = match (&opts.mu, &opts.sigma) {
        (Some(mu), Some(sigma)) => {
            let mean = io::read_vector_csv(mu)?;
            let cov = io::read_matrix_csv(sigma)?;
            (whiten(&raw, &mean, &cov)?, "mu_sigma")
        }
        (None, None) if opts.assume_whitened => (raw, "assumed"),
        (None, None) => {
            return Err(Error::config(
                "mu/sigma",
                "supply --mu and --sigma, or --assume-whitened for pre-whitened data",
            ))
        }
        _ => return Err(Error::config("mu/sigma", "--mu and --sigma must be given together")),
    };
    let model = CovariateModel::independent(Marginal::StandardNormal, p);
    let bundle = algorithm1(&sample, &opts.selector, &model)?;
    Ok(EstimateReport { n: sample.n(), p, whitening, selector: opts.selector.name(), estimate: bundle })
}

/// Runs every grid cell in order and concatenates the metric rows.
pub fn simulate(config: &RunConfig) -> Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for scenario in config.scenarios() {
        rows.extend(run_study(&scenario, &config.estimators)?);
    }
    Ok(rows)
}
