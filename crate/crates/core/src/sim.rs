//! Simulation studies on the additive sine model
//!
//! ```text
//! Y = γ_L Σ_{j∈Θ} [X_j + sin X_j] + γ_S Σ_{j∉Θ} [X_j + sin X_j] + ξ
//! ```
//!
//! with i.i.d. standardized covariates. The scales are chosen so that
//! `β_j² = ητ²/K` on the `K` indices of `Θ` and `τ²(1−η)/(p−K)` elsewhere,
//! making `τ²` the signal level and `η` the share of it carried by `Θ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::boot::{algorithm2, PluginEstimator, DEFAULT_BOOTSTRAP_REPLICATES};
use crate::covmodel::{CovariateModel, Marginal, MomentSet, ResponseLaw};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, StreamRng};
use crate::select::Selector;
use crate::ustat::{beta_sq_hat, tau_sq_naive, LabeledSample, WMatrix};
use crate::zeroest::{algorithm1, c_hat, improve, Coefficient, CoefficientKind, ZeroStat};

pub const DEFAULT_K: usize = 6;
pub const DEFAULT_REPS: usize = 100;

/// Moments of `sin X` needed to scale the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineMoments {
    /// `E[sin X]`
    pub sin: f64,
    /// `E[X sin X]`
    pub x_sin: f64,
    /// `E[sin² X]`
    pub sin_sq: f64,
}

impl SineMoments {
    pub fn of(marginal: Marginal) -> Self {
        match marginal {
            // X = T − 1 with T ~ Exp(1); from E[e^{isX}] = e^{−is}/(1 − is)
            Marginal::CenteredExponential => {
                let (s1, c1) = 1.0f64.sin_cos();
                let (s2, c2) = 2.0f64.sin_cos();
                Self { sin: (c1 - s1) / 2.0, x_sin: s1 / 2.0, sin_sq: (1.0 - (c2 + 2.0 * s2) / 5.0) / 2.0 }
            }
            Marginal::StandardNormal => {
                Self { sin: 0.0, x_sin: (-0.5f64).exp(), sin_sq: (1.0 - (-2.0f64).exp()) / 2.0 }
            }
        }
    }

    /// `E[X (X + sin X)] = 1 + E[X sin X]`, the slope of one model term.
    pub fn slope(&self) -> f64 {
        1.0 + self.x_sin
    }

    /// `Var(X + sin X)`.
    pub fn term_variance(&self) -> f64 {
        1.0 + 2.0 * self.x_sin + self.sin_sq - self.sin * self.sin
    }
}

/// One cell of a simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub tau_sq: f64,
    pub eta: f64,
    pub reps: usize,
    pub base_seed: u64,
    pub covariates: Marginal,
    /// Standard deviation of the Gaussian noise `ξ`.
    pub noise_sd: f64,
    /// `Θ`, 0-based.
    pub theta_set: Vec<usize>,
    /// Subtract the population mean `Σ γ_j E[sin X]` from every response.
    pub center_response: bool,
}

impl Scenario {
    /// `K = 6`, `R = 100`, centered exponential covariates, standard normal noise,
    /// `Θ` the first `K` indices.
    pub fn new(n: usize, p: usize, tau_sq: f64, eta: f64) -> Self {
        Self {
            n,
            p,
            k: DEFAULT_K,
            tau_sq,
            eta,
            reps: DEFAULT_REPS,
            base_seed: 0,
            covariates: Marginal::CenteredExponential,
            noise_sd: 1.0,
            theta_set: (0..DEFAULT_K).collect(),
            center_response: true,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self.theta_set = (0..k).collect();
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_centering(mut self, center: bool) -> Self {
        self.center_response = center;
        self
    }

    /// `E[Y]`; zero when the response is centered.
    pub fn response_mean(&self) -> f64 {
        if self.center_response {
            0.0
        } else {
            self.gammas().sum() * self.sine_moments().sin
        }
    }

    fn response_shift(&self) -> f64 {
        if self.center_response {
            -self.gammas().sum() * self.sine_moments().sin
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        if self.n < 2 {
            return bad("n", format!("need at least 2 observations, got {}", self.n));
        }
        if self.k == 0 || self.k > self.p {
            return bad("k", format!("K must lie in 1..={}, got {}", self.p, self.k));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta", format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if !(self.tau_sq >= 0.0) || !self.tau_sq.is_finite() {
            return bad("tau_sq", format!("tau_sq must be finite and non-negative, got {}", self.tau_sq));
        }
        if self.p == self.k && self.eta < 1.0 && self.tau_sq > 0.0 {
            return bad("eta", "with K = p all signal lies in Theta, so eta must be 1".into());
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return bad("noise_sd", format!("must be finite and non-negative, got {}", self.noise_sd));
        }
        if self.reps == 0 {
            return bad("reps", "at least one replicate is required".into());
        }
        let mut theta = self.theta_set.clone();
        theta.sort_unstable();
        theta.dedup();
        if theta.len() != self.k || theta.iter().any(|&j| j >= self.p) {
            return bad("theta_set", format!("must hold {} distinct indices below {}", self.k, self.p));
        }
        Ok(())
    }

    pub fn sine_moments(&self) -> SineMoments {
        SineMoments::of(self.covariates)
    }

    /// `γ_L`
    pub fn gamma_large(&self) -> f64 {
        let m = self.sine_moments().slope();
        (self.eta * self.tau_sq / (self.k as f64 * m * m)).sqrt()
    }

    /// `γ_S`; zero when `K = p`.
    pub fn gamma_small(&self) -> f64 {
        if self.p == self.k {
            return 0.0;
        }
        let m = self.sine_moments().slope();
        ((1.0 - self.eta) * self.tau_sq / ((self.p - self.k) as f64 * m * m)).max(0.0).sqrt()
    }

    /// Per-covariate scale `γ_j`.
    pub fn gammas(&self) -> DVector<f64> {
        let (gl, gs) = (self.gamma_large(), self.gamma_small());
        let mut g = DVector::from_element(self.p, gs);
        for &j in &self.theta_set {
            g[j] = gl;
        }
        g
    }

    /// Population slope `β_j = γ_j (1 + E[X sin X])`.
    pub fn beta(&self) -> DVector<f64> {
        self.gammas() * self.sine_moments().slope()
    }

    pub fn sigma_y_sq(&self) -> f64 {
        self.gammas().norm_squared() * self.sine_moments().term_variance() + self.noise_sd * self.noise_sd
    }

    /// `σ² = σ_Y² − τ²`.
    pub fn sigma_sq(&self) -> f64 {
        self.sigma_y_sq() - self.beta().norm_squared()
    }

    /// `θ_S = E[W g_S(X)]`, in closed form for this additive model:
    /// `θ_S,k = Σ_{l∈S, l≠k} β_l` for `k ∈ S` and zero otherwise.
    pub fn theta(&self, subset: &[usize]) -> DVector<f64> {
        let beta = self.beta();
        let total: f64 = subset.iter().map(|&l| beta[l]).sum();
        let mut t = DVector::zeros(self.p);
        for &k in subset {
            t[k] = total - beta[k];
        }
        t
    }

    /// `β`, `α`, `σ_Y²` and `θ_S` for each subset, all exact.
    pub fn analytic_moments(&self, subsets: &[Vec<usize>]) -> MomentSet {
        let mut m = MomentSet::new(self.beta(), self.response_mean(), self.sigma_y_sq());
        for s in subsets {
            m = m.with_theta(s, self.theta(s));
        }
        m
    }

    /// `c*_S = 2βᵀθ_S / Var[g_S]`, exact.
    pub fn oracle_coefficient(&self, subset: &[usize]) -> f64 {
        let m = subset.len() as f64;
        2.0 * self.beta().dot(&self.theta(subset)) / (m * (m - 1.0) / 2.0)
    }

    pub fn covariate_model(&self) -> CovariateModel {
        CovariateModel::independent(self.covariates, self.p)
    }

    /// Seed of the stream that generates replicate `rep`.
    pub fn replicate_seed(&self, rep: usize) -> u64 {
        derive_seed(self.base_seed, rep as u64)
    }
}

impl ResponseLaw for Scenario {
    fn sample(&self, x: &[f64], rng: &mut StreamRng) -> f64 {
        let (gl, gs) = (self.gamma_large(), self.gamma_small());
        let mut y = self.response_shift();
        for (j, &v) in x.iter().enumerate() {
            let g = if self.theta_set.contains(&j) { gl } else { gs };
            y += g * (v + v.sin());
        }
        y + self.noise_sd * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Dataset `rep` of the scenario. Bit-identical across calls.
pub fn gen_dataset(scenario: &Scenario, rep: usize) -> Result<LabeledSample> {
    scenario.validate()?;
    let (n, p) = (scenario.n, scenario.p);
    let mut rng = stream_rng(scenario.replicate_seed(rep), 0);
    let marginal = scenario.covariates;
    let gammas = scenario.gammas();
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::from_element(n, scenario.response_shift());
    for j in 0..p {
        let g = gammas[j];
        let mut col = x.column_mut(j);
        for i in 0..n {
            let v = marginal.sample(&mut rng);
            col[i] = v;
            y[i] += g * (v + v.sin());
        }
    }
    for i in 0..n {
        y[i] += scenario.noise_sd * rng.sample::<f64, _>(StandardNormal);
    }
    LabeledSample::new(x, y)
}

/// An estimator of `τ²` evaluated by a study.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EstimatorKind {
    /// `τ̂²`
    Naive,
    /// `τ̂² − ĉ*·Z` over the selected subset.
    Improved(Selector),
    /// `τ̂² − c*·Z` with the exact coefficient of the selected subset.
    Oracle(Selector),
    /// Bootstrap-calibrated correction of `τ̂²`.
    Bootstrap { selector: Selector, replicates: usize },
}

/// Names accepted by [`SuiteEntry::from_name`].
pub const ESTIMATOR_NAMES: [&str; 7] =
    ["naive", "naive_tg", "naive_th", "oracle_tg", "oracle_th", "boot_tg", "boot_th"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteEntry {
    pub name: String,
    pub kind: EstimatorKind,
}

impl SuiteEntry {
    pub fn new(name: impl Into<String>, kind: EstimatorKind) -> Self {
        Self { name: name.into(), kind }
    }

    /// `*_tg` use every covariate; `*_th` use `selector`; `boot_*` draw
    /// `replicates` bootstrap samples.
    pub fn from_name(name: &str, selector: &Selector, replicates: usize) -> Result<Self> {
        let kind = match name {
            "naive" => EstimatorKind::Naive,
            "naive_tg" => EstimatorKind::Improved(Selector::All),
            "naive_th" => EstimatorKind::Improved(selector.clone()),
            "oracle_tg" => EstimatorKind::Oracle(Selector::All),
            "oracle_th" => EstimatorKind::Oracle(selector.clone()),
            "boot_tg" => EstimatorKind::Bootstrap { selector: Selector::All, replicates },
            "boot_th" => EstimatorKind::Bootstrap { selector: selector.clone(), replicates },
            other => {
                return Err(Error::config(
                    "estimators",
                    format!("unknown estimator `{other}`; available: {}", ESTIMATOR_NAMES.join(", ")),
                ))
            }
        };
        Ok(Self::new(name, kind))
    }

    /// The Table-1 suite: naive, `T_ĝ` and `T_ĥ` with gap selection.
    pub fn table1_suite() -> Vec<SuiteEntry> {
        ["naive", "naive_tg", "naive_th"]
            .iter()
            .map(|n| Self::from_name(n, &Selector::Gap, DEFAULT_BOOTSTRAP_REPLICATES).expect("builtin"))
            .collect()
    }

    /// Estimate on one replicate. `seed` feeds the bootstrap.
    pub fn evaluate(&self, sample: &LabeledSample, scenario: &Scenario, model: &CovariateModel, seed: u64) -> Result<f64> {
        match &self.kind {
            EstimatorKind::Naive => tau_sq_naive(&WMatrix::new(sample)),
            EstimatorKind::Improved(sel) => Ok(algorithm1(sample, sel, model)?.tau_sq()),
            EstimatorKind::Oracle(sel) => oracle_estimate(sample, sel, scenario, model).map(|o| o.0),
            EstimatorKind::Bootstrap { selector, replicates } => {
                let naive = PluginEstimator::builtin("naive", model)?;
                Ok(algorithm2(sample, &naive, selector, model, *replicates, seed)?.estimate)
            }
        }
    }
}

/// `T_h = τ̂² − c*_h Z_h` with the exact coefficient, and `T_ĥ` from the same
/// sample and subset. Falls back to the naive estimate for both when fewer than
/// two covariates are selected.
pub fn oracle_estimate(
    sample: &LabeledSample,
    selector: &Selector,
    scenario: &Scenario,
    model: &CovariateModel,
) -> Result<(f64, f64)> {
    let w = WMatrix::new(sample);
    let beta_sq = beta_sq_hat(&w)?;
    let tau = beta_sq.sum();
    let selection = selector.select(beta_sq.as_slice())?;
    if selection.len() < 2 {
        return Ok((tau, tau));
    }
    let var_g = model.var_g(&selection.indices)?.value;
    let z = ZeroStat::new(sample.x(), &selection.indices, var_g)?;
    let oracle = Coefficient::new(scenario.oracle_coefficient(&selection.indices), CoefficientKind::Oracle)?;
    let estimated = c_hat(&w, &z)?;
    Ok((improve(tau, &oracle, &z), improve(tau, &estimated, &z)))
}

/// Estimates for every replicate (rows) and suite entry (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateTable {
    pub names: Vec<String>,
    pub estimates: Vec<Vec<f64>>,
}

impl ReplicateTable {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.estimates.iter().map(|r| r[k]).collect()
    }
}

/// Runs every suite entry on the same `R` datasets.
pub fn run_replicates(scenario: &Scenario, suite: &[SuiteEntry]) -> Result<ReplicateTable> {
    scenario.validate()?;
    if suite.is_empty() {
        return Err(Error::config("estimators", "the estimator suite is empty"));
    }
    let model = scenario.covariate_model();
    let rows: Vec<Result<Vec<f64>>> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| {
            let seed = scenario.replicate_seed(rep);
            let wrap = |e: Error| Error::Data {
                row: None,
                message: format!("replicate {rep} (seed {seed}) failed: {e}"),
            };
            let sample = gen_dataset(scenario, rep).map_err(wrap)?;
            suite
                .iter()
                .enumerate()
                .map(|(k, entry)| entry.evaluate(&sample, scenario, &model, derive_seed(seed, k as u64)).map_err(wrap))
                .collect()
        })
        .collect();
    Ok(ReplicateTable {
        names: suite.iter().map(|e| e.name.clone()).collect(),
        estimates: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// Summary of one estimator over the replicates of one scenario.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricsRow {
    pub eta: f64,
    pub tau_sq: f64,
    pub estimator: String,
    pub bias: f64,
    /// Sample standard deviation of the estimates.
    pub se: f64,
    pub rmse: f64,
    /// RMSE change relative to the first estimator of the suite, in percent.
    pub pct_change: f64,
    /// Delta-method standard error of `rmse`.
    pub sigma_rmse_hat: f64,
    pub reps: usize,
}

/// Bias, SE, RMSE and its delta-method standard error.
pub fn summarize(estimator: &str, estimates: &[f64], truth: f64, eta: f64) -> MetricsRow {
    let r = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / r;
    let se = if estimates.len() > 1 {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt()
    } else {
        0.0
    };
    let sq: Vec<f64> = estimates.iter().map(|e| (e - truth).powi(2)).collect();
    let mse = sq.iter().sum::<f64>() / r;
    let rmse = mse.sqrt();
    let sigma_rmse_hat = if rmse > 0.0 && estimates.len() > 1 {
        let var_sq = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (r - 1.0);
        (var_sq / r).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    MetricsRow {
        eta,
        tau_sq: truth,
        estimator: estimator.to_string(),
        bias: mean - truth,
        se,
        rmse,
        pct_change: 0.0,
        sigma_rmse_hat,
        reps: estimates.len(),
    }
}

/// Metrics rows for a replicate table; `pct_change` is relative to column 0.
pub fn metrics(scenario: &Scenario, table: &ReplicateTable) -> Vec<MetricsRow> {
    let mut rows: Vec<MetricsRow> = table
        .names
        .iter()
        .enumerate()
        .map(|(k, name)| summarize(name, &table.column(k), scenario.tau_sq, scenario.eta))
        .collect();
    let reference = rows[0].rmse;
    for row in rows.iter_mut() {
        row.pct_change = if reference > 0.0 {
            100.0 * (row.rmse - reference) / reference
        } else if row.rmse == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    rows
}

/// Runs the suite on the scenario and summarizes it.
pub fn run_study(scenario: &Scenario, suite: &[SuiteEntry]) -> Result<Vec<MetricsRow>> {
    let table = run_replicates(scenario, suite)?;
    Ok(metrics(scenario, &table))
}
