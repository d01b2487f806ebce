//! Estimation of the signal level `τ²` and noise level `σ²` in high-dimensional
//! regression without a linear-model assumption, when the covariate
//! distribution is known.
//!
//! * [`ustat`]: the naive U-statistic estimators and their exact variances.
//! * [`zeroest`]: variance reduction with zero-mean control statistics.
//! * [`select`]: covariate selection for the control statistic.
//! * [`boot`]: bootstrap calibration for arbitrary initial estimators.
//! * [`covmodel`]: the covariate law, whitening and moment oracles.
//! * [`sim`]: simulation studies and their summary metrics.

pub mod boot;
pub mod cli;
pub mod covmodel;
pub mod error;
pub mod rng;
pub mod select;
pub mod sim;
pub mod ustat;
pub mod verify;
pub mod zeroest;

pub use boot::{algorithm2, BootstrapResult, PluginEstimator};
pub use covmodel::{population_moments, whiten, CovariateModel, Marginal, MomentSet, Whitener};
pub use error::{Error, Result};
pub use select::{gap_select, select_all, select_fixed, Selection, Selector};
pub use sim::{gen_dataset, run_study, MetricsRow, Scenario, SuiteEntry};
pub use ustat::{
    beta_sq_hat, sigma_sq_hat, sigma_y_sq_hat, tau_sq_naive, var_sigma_hat, var_tau_naive, EstimateBundle,
    LabeledSample, WMatrix,
};
pub use zeroest::{algorithm1, c_hat, c_oracle, improve, Coefficient, ZeroStat};
