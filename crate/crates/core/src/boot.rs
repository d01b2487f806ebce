//! Bootstrap approximation of the optimal zero-estimator coefficient for an
//! arbitrary initial estimator of `τ²`.
//!
//! The subset `S` is chosen once on the original sample. Each bootstrap
//! replicate re-evaluates the initial estimator and `Z_h` on rows drawn with
//! replacement; the empirical covariance of the two, divided by the known
//! `Var(Z_h) = Var[h(X)] / n`, gives the coefficient `c̃*`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::covmodel::CovariateModel;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::select::Selector;
use crate::ustat::{beta_sq_hat, tau_sq_naive, LabeledSample, WMatrix};
use crate::zeroest::{algorithm1, ZeroStat};

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 100;

/// Names accepted by [`PluginEstimator::builtin`].
pub const BUILTIN_PLUGINS: [&str; 3] = ["naive", "naive_tg", "naive_th"];

type EvalFn = dyn Fn(&LabeledSample) -> Result<f64> + Send + Sync;

/// An initial estimator of `τ²`. Must be deterministic given the sample.
#[derive(Clone)]
pub struct PluginEstimator {
    name: String,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for PluginEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PluginEstimator").field("name", &self.name).finish_non_exhaustive()
    }
}

impl PluginEstimator {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&LabeledSample) -> Result<f64> + Send + Sync + 'static,
    {
        Self { name: name.into(), eval: Arc::new(eval) }
    }

    /// `naive` is `τ̂²`; `naive_tg` and `naive_th` are its zero-estimator
    /// corrections over all covariates and over the gap-selected subset.
    pub fn builtin(name: &str, model: &CovariateModel) -> Result<Self> {
        let selector = match name {
            "naive" => return Ok(Self::new(name, |s| tau_sq_naive(&WMatrix::new(s)))),
            "naive_tg" => Selector::All,
            "naive_th" => Selector::Gap,
            other => {
                return Err(Error::config(
                    "plugin",
                    format!("unknown estimator `{other}`; available: {}", BUILTIN_PLUGINS.join(", ")),
                ))
            }
        };
        let model = model.clone();
        Ok(Self::new(name, move |s| Ok(algorithm1(s, &selector, &model)?.tau_sq())))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, sample: &LabeledSample) -> Result<f64> {
        (self.eval)(sample)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BootstrapResult {
    /// `τ̃² − c̃*·Z_h` on the original sample.
    pub estimate: f64,
    pub c_tilde: f64,
    /// Requested number of bootstrap replicates.
    pub m: usize,
    /// Empirical covariance of the replicate pairs `(τ̃²*, Z_h*)`.
    pub cov_hat: f64,
    pub subset: Vec<usize>,
    /// `τ̃²` on the original sample.
    pub base_estimate: f64,
    /// `Z_h` on the original sample.
    pub z_h: f64,
    /// Replicates on which the estimator failed.
    pub skipped: Vec<usize>,
    /// Fewer than two covariates were selected; `estimate` is the base estimate.
    pub no_zero_estimator: bool,
}

/// Improves `estimator` on `sample` with a bootstrap-calibrated zero-estimator.
///
/// `sample` must be whitened. Replicate `m` draws its rows from stream `m` of
/// `seed`, so the result does not depend on scheduling.
pub fn algorithm2(
    sample: &LabeledSample,
    estimator: &PluginEstimator,
    selector: &Selector,
    model: &CovariateModel,
    m: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if m < 2 {
        return Err(Error::Bootstrap(format!("at least 2 bootstrap replicates are required, got {m}")));
    }
    if model.p() != sample.p() {
        return Err(Error::Shape(format!(
            "model has {} covariates, sample has {}",
            model.p(),
            sample.p()
        )));
    }
    let n = sample.n();
    let beta_sq = beta_sq_hat(&WMatrix::new(sample))?;
    let selection = selector.select(beta_sq.as_slice())?;
    let base_estimate = estimator.eval(sample)?;

    if selection.len() < 2 {
        return Ok(BootstrapResult {
            estimate: base_estimate,
            c_tilde: 0.0,
            m,
            cov_hat: 0.0,
            subset: selection.indices,
            base_estimate,
            z_h: 0.0,
            skipped: Vec::new(),
            no_zero_estimator: true,
        });
    }

    let var_h = model.var_g(&selection.indices)?.value;
    let zstat = ZeroStat::new(sample.x(), &selection.indices, var_h)?;
    let h = zstat.z_values.as_slice();

    let replicates: Vec<Option<(f64, f64)>> = (0..m)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let boot = sample.select_rows(&rows);
            let t = estimator.eval(&boot).ok().filter(|v| v.is_finite())?;
            let z = rows.iter().map(|&i| h[i]).sum::<f64>() / n as f64;
            Some((t, z))
        })
        .collect();

    let skipped: Vec<usize> = replicates
        .iter()
        .enumerate()
        .filter_map(|(r, v)| v.is_none().then_some(r))
        .collect();
    if 2 * skipped.len() > m {
        return Err(Error::Bootstrap(format!(
            "estimator `{}` failed on {} of {m} replicates",
            estimator.name(),
            skipped.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = replicates.into_iter().flatten().collect();
    if pairs.len() < 2 {
        return Err(Error::Bootstrap("fewer than two usable replicates".into()));
    }
    let cov_hat = empirical_covariance(&pairs);
    let c_tilde = cov_hat / zstat.var_z();
    Ok(BootstrapResult {
        estimate: base_estimate - c_tilde * zstat.z_bar,
        c_tilde,
        m,
        cov_hat,
        subset: zstat.subset,
        base_estimate,
        z_h: zstat.z_bar,
        skipped,
        no_zero_estimator: false,
    })
}

/// Unbiased (`1/(M−1)`) covariance, centred at the replicate means.
fn empirical_covariance(pairs: &[(f64, f64)]) -> f64 {
    // shift by the first pair so that a constant coordinate gives exactly 0
    let (t0, z0) = pairs[0];
    let k = pairs.len() as f64;
    let (st, sz) = pairs.iter().fold((0.0, 0.0), |(a, b), &(t, z)| (a + (t - t0), b + (z - z0)));
    let (mt, mz) = (st / k, sz / k);
    pairs.iter().map(|&(t, z)| (t - t0 - mt) * (z - z0 - mz)).sum::<f64>() / (k - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::Marginal;
    use nalgebra::{DMatrix, DVector};
    use rand_distr::StandardNormal;

    fn linear_sample(n: usize, p: usize, seed: u64) -> LabeledSample {
        let mut rng = stream_rng(seed, 0);
        let x = DMatrix::from_fn(n, p, |_, _| Marginal::CenteredExponential.sample(&mut rng));
        let y = DVector::from_fn(n, |i, _| {
            x.row(i).iter().take(3).sum::<f64>() + rng.sample::<f64, _>(StandardNormal)
        });
        LabeledSample::new(x, y).unwrap()
    }

    #[test]
    fn constant_estimator_has_zero_coefficient() {
        let s = linear_sample(40, 6, 1);
        let model = CovariateModel::independent(Marginal::CenteredExponential, 6);
        let k = PluginEstimator::new("const", |_| Ok(0.1));
        let r = algorithm2(&s, &k, &Selector::All, &model, 50, 7).unwrap();
        assert_eq!(r.cov_hat, 0.0);
        assert_eq!(r.c_tilde, 0.0);
        assert_eq!(r.estimate, 0.1);
        assert_eq!(r.base_estimate, r.estimate);
    }

    #[test]
    fn result_is_deterministic_and_consistent() {
        let s = linear_sample(50, 8, 2);
        let model = CovariateModel::independent(Marginal::CenteredExponential, 8);
        let naive = PluginEstimator::builtin("naive", &model).unwrap();
        let a = algorithm2(&s, &naive, &Selector::Gap, &model, 30, 11).unwrap();
        let b = algorithm2(&s, &naive, &Selector::Gap, &model, 30, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimate, a.base_estimate - a.c_tilde * a.z_h);
        let b = algorithm2(&s, &naive, &Selector::All, &model, 30, 11).unwrap();
        let c = algorithm2(&s, &naive, &Selector::All, &model, 30, 12).unwrap();
        assert!(!b.no_zero_estimator);
        assert_ne!(b.c_tilde, c.c_tilde);
    }

    #[test]
    fn failures_are_skipped_or_fatal() {
        let s = linear_sample(30, 4, 3);
        let model = CovariateModel::independent(Marginal::CenteredExponential, 4);
        // fails whenever the first bootstrap row is not row 0 of the original
        let first = s.y()[0];
        let flaky = PluginEstimator::new("flaky", move |b| {
            if b.y()[0] == first {
                Ok(1.0)
            } else {
                Err(Error::data("boom"))
            }
        });
        // the original sample passes, nearly all replicates fail
        assert!(matches!(
            algorithm2(&s, &flaky, &Selector::All, &model, 20, 1),
            Err(Error::Bootstrap(_))
        ));
        let odd = PluginEstimator::new("odd", |b| {
            if b.y().sum() > 1e9 {
                Err(Error::data("never"))
            } else {
                Ok(b.y()[0])
            }
        });
        let r = algorithm2(&s, &odd, &Selector::All, &model, 20, 1).unwrap();
        assert!(r.skipped.is_empty());
    }

    #[test]
    fn builtin_registry() {
        let model = CovariateModel::independent(Marginal::StandardNormal, 3);
        for name in BUILTIN_PLUGINS {
            assert_eq!(PluginEstimator::builtin(name, &model).unwrap().name(), name);
        }
        let err = PluginEstimator::builtin("eigenprism", &model).unwrap_err();
        assert!(err.to_string().contains("naive_th"));
    }

    #[test]
    fn rejects_too_few_replicates() {
        let s = linear_sample(10, 3, 1);
        let model = CovariateModel::independent(Marginal::StandardNormal, 3);
        let naive = PluginEstimator::builtin("naive", &model).unwrap();
        assert!(matches!(algorithm2(&s, &naive, &Selector::All, &model, 1, 0), Err(Error::Bootstrap(_))));
    }

    #[test]
    fn covariance_helper() {
        let pairs = [(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)];
        assert!((empirical_covariance(&pairs) - 2.0).abs() < 1e-15);
    }
}
