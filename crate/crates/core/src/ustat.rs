//! Order-two U-statistic estimators of the signal and noise levels.
//!
//! With whitened covariates (`E[X] = 0`, `Var[X] = I`) the slope of the best
//! linear predictor satisfies `β_j = E[X_j Y]`. Writing `W_ij = X_ij Y_i`, the
//! pairwise products `W_i1j W_i2j` (`i1 ≠ i2`) are unbiased for `β_j²`, and
//! summing over `j` gives the naive estimator of `τ² = ‖β‖²`.
//!
//! All estimators here are computed from column sums in `O(np)` rather than
//! by enumerating the `n(n-1)/2` pairs.

use nalgebra::{DMatrix, DVector};

use crate::covmodel::MomentSet;
use crate::error::{Error, Result};

/// Above this many cells, column sums switch to compensated summation.
pub const COMPENSATED_SUM_CELLS: usize = 1_000_000;

/// `n` observations of `p` covariates with a scalar response.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl LabeledSample {
    /// Checks shapes, finiteness and `n >= 2`.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "covariate matrix has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::Shape("at least one covariate is required".into()));
        }
        if y.len() < 2 {
            return Err(Error::SampleSize { n: y.len(), required: 2 });
        }
        for i in 0..x.nrows() {
            if !y[i].is_finite() || x.row(i).iter().any(|v| !v.is_finite()) {
                return Err(Error::data_at(i, "non-finite value"));
            }
        }
        Ok(Self { x, y })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        debug_assert_eq!(x.nrows(), y.len());
        Self { x, y }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// The `n × p` covariate matrix.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// A new sample made of the given rows, repeats allowed.
    pub fn select_rows(&self, rows: &[usize]) -> LabeledSample {
        let n = rows.len();
        let p = self.p();
        let mut x = DMatrix::zeros(n, p);
        for j in 0..p {
            let src = self.x.column(j);
            let mut dst = x.column_mut(j);
            for (k, &i) in rows.iter().enumerate() {
                dst[k] = src[i];
            }
        }
        let y = DVector::from_iterator(n, rows.iter().map(|&i| self.y[i]));
        LabeledSample { x, y }
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.x, self.y)
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// The products `W_ij = X_ij · Y_i` together with their column sums.
#[derive(Debug, Clone)]
pub struct WMatrix {
    w: DMatrix<f64>,
    column_sums: DVector<f64>,
    column_sq_sums: DVector<f64>,
}

impl WMatrix {
    pub fn new(sample: &LabeledSample) -> Self {
        let (n, p) = (sample.n(), sample.p());
        let mut w = sample.x().clone();
        for j in 0..p {
            w.column_mut(j).component_mul_assign(sample.y());
        }
        let compensated = n * p > COMPENSATED_SUM_CELLS;
        let mut column_sums = DVector::zeros(p);
        let mut column_sq_sums = DVector::zeros(p);
        for j in 0..p {
            let col = w.column(j);
            if compensated {
                column_sums[j] = compensated_sum(col.iter().copied());
                column_sq_sums[j] = compensated_sum(col.iter().map(|v| v * v));
            } else {
                column_sums[j] = col.sum();
                column_sq_sums[j] = col.norm_squared();
            }
        }
        Self { w, column_sums, column_sq_sums }
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    /// `S_j = Σ_i W_ij`.
    pub fn column_sums(&self) -> &DVector<f64> {
        &self.column_sums
    }

    /// `Q_j = Σ_i W_ij²`.
    pub fn column_sq_sums(&self) -> &DVector<f64> {
        &self.column_sq_sums
    }
}

fn require_pairs(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::SampleSize { n, required: 2 });
    }
    Ok((n * (n - 1)) as f64)
}

/// Unbiased estimates of `β_j²`: `(S_j² − Q_j) / (n(n−1))` per column.
pub fn beta_sq_hat(w: &WMatrix) -> Result<DVector<f64>> {
    let pairs = require_pairs(w.n())?;
    Ok(w.column_sums.zip_map(&w.column_sq_sums, |s, q| (s * s - q) / pairs))
}

/// The naive estimator `τ̂²`, the average of `W_i1ᵀ W_i2` over unordered pairs.
pub fn tau_sq_naive(w: &WMatrix) -> Result<f64> {
    Ok(beta_sq_hat(w)?.sum())
}

/// Unbiased sample variance of the response.
pub fn sigma_y_sq_hat(y: &DVector<f64>) -> Result<f64> {
    let n = y.len();
    if n < 2 {
        return Err(Error::SampleSize { n, required: 2 });
    }
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &v) in y.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    Ok(m2 / (n - 1) as f64)
}

/// `σ̂² = σ̂_Y² − τ̂²`. Not truncated at zero.
pub fn sigma_sq_hat(sigma_y_sq_hat: f64, tau_sq_hat: f64) -> f64 {
    sigma_y_sq_hat - tau_sq_hat
}

/// How an estimate of `τ²` was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    /// Zero-estimator correction over a selected covariate subset.
    ZeroEstimator,
}

/// Zero-estimator fields attached to a bundle by [`crate::zeroest::algorithm1`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ZeroCorrection {
    pub subset: Vec<usize>,
    /// `Z_h`, the mean of `h(X_i)`; zero when no correction was possible.
    pub z_bar: f64,
    pub coefficient: f64,
    /// `τ̂² − ĉ·Z_h`.
    pub improved: f64,
    /// Set when the selected subset had fewer than two covariates, in which
    /// case `improved` equals the naive estimate.
    pub no_zero_estimator: bool,
}

/// One estimation run on one sample.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EstimateBundle {
    pub tau_sq_hat: f64,
    pub sigma_y_sq_hat: f64,
    pub sigma_sq_hat: f64,
    pub beta_sq_hat: Vec<f64>,
    pub method: Method,
    pub zero: Option<ZeroCorrection>,
}

impl EstimateBundle {
    /// Naive estimates from a precomputed `W`.
    pub fn naive_from_w(sample: &LabeledSample, w: &WMatrix) -> Result<Self> {
        let beta_sq = beta_sq_hat(w)?;
        let tau_sq_hat = beta_sq.sum();
        let sigma_y_sq_hat = sigma_y_sq_hat(sample.y())?;
        Ok(Self {
            tau_sq_hat,
            sigma_y_sq_hat,
            sigma_sq_hat: sigma_sq_hat(sigma_y_sq_hat, tau_sq_hat),
            beta_sq_hat: beta_sq.as_slice().to_vec(),
            method: Method::Naive,
            zero: None,
        })
    }

    pub fn naive(sample: &LabeledSample) -> Result<Self> {
        Self::naive_from_w(sample, &WMatrix::new(sample))
    }

    /// `max(σ̂², 0)`.
    pub fn sigma_sq_hat_clamped(&self) -> f64 {
        self.sigma_sq_hat.max(0.0)
    }

    /// The best available estimate of `τ²`: the corrected one when present.
    pub fn tau_sq(&self) -> f64 {
        self.zero.as_ref().map_or(self.tau_sq_hat, |z| z.improved)
    }

    /// `σ̂_Y²` minus [`Self::tau_sq`].
    pub fn sigma_sq(&self) -> f64 {
        self.sigma_y_sq_hat - self.tau_sq()
    }
}

/// `Var(τ̂²)` from population moments, with its two kernel variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveVariance {
    pub variance: f64,
    /// `βᵀAβ − ‖β‖⁴`
    pub zeta1: f64,
    /// `‖A‖_F² − ‖β‖⁴`
    pub zeta2: f64,
}

impl NaiveVariance {
    /// A negative variance means the moment inputs are not from one distribution.
    pub fn is_consistent(&self) -> bool {
        self.variance >= 0.0
    }
}

/// Exact variance of `τ̂²` from the Hoeffding decomposition:
/// `4(n−2)/(n(n−1)) ζ₁ + 2/(n(n−1)) ζ₂`.
pub fn var_tau_naive(moments: &MomentSet, n: usize) -> Result<NaiveVariance> {
    let a = moments
        .a
        .as_ref()
        .ok_or_else(|| Error::Moment("A = E[WWᵀ] is missing".into()))?;
    let beta = &moments.beta;
    if a.nrows() != beta.len() || a.ncols() != beta.len() {
        return Err(Error::Shape(format!(
            "A is {}x{} but beta has length {}",
            a.nrows(),
            a.ncols(),
            beta.len()
        )));
    }
    let norm4 = beta.norm_squared().powi(2);
    let zeta1 = (a * beta).dot(beta) - norm4;
    let zeta2 = a.norm_squared() - norm4;
    Ok(NaiveVariance { variance: naive_variance_from_zetas(zeta1, zeta2, n)?, zeta1, zeta2 })
}

/// The variance formula given the kernel variances directly.
pub fn naive_variance_from_zetas(zeta1: f64, zeta2: f64, n: usize) -> Result<f64> {
    let pairs = require_pairs(n)?;
    Ok(4.0 * (n as f64 - 2.0) / pairs * zeta1 + 2.0 / pairs * zeta2)
}

/// `Var(σ̂²)` split into its four terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseVariance {
    pub variance: f64,
    /// `μ₄/n − (n−3)/(n(n−1)) σ_Y⁴`, the variance of `σ̂_Y²`.
    pub sigma_y_term: f64,
    pub tau_term: f64,
    /// `−(4/n)(πᵀβ − τ²σ_Y²)`
    pub cross_term: f64,
    /// `4/(n(n−1)) Σ_j E[W_j(Y−α)]²`
    pub wy_term: f64,
}

/// Exact variance of `σ̂² = σ̂_Y² − τ̂²`.
pub fn var_sigma_hat(moments: &MomentSet, n: usize) -> Result<NoiseVariance> {
    if n < 4 {
        return Err(Error::SampleSize { n, required: 4 });
    }
    let mu4 = moments.mu4.ok_or_else(|| Error::Moment("mu4 is missing".into()))?;
    let pi = moments.pi.as_ref().ok_or_else(|| Error::Moment("pi is missing".into()))?;
    let wy = moments
        .wy()
        .ok_or_else(|| Error::Moment("E[W(Y-alpha)] (theta key \"wy\") is missing".into()))?;
    let beta = &moments.beta;
    if pi.len() != beta.len() || wy.len() != beta.len() {
        return Err(Error::Shape("pi, wy and beta must have equal length".into()));
    }
    let nf = n as f64;
    let pairs = nf * (nf - 1.0);
    let sy2 = moments.sigma_y_sq;
    let tau_sq = beta.norm_squared();

    let sigma_y_term = mu4 / nf - (nf - 3.0) / pairs * sy2 * sy2;
    let tau_term = var_tau_naive(moments, n)?.variance;
    let cross_term = -4.0 / nf * (pi.dot(beta) - tau_sq * sy2);
    let wy_term = 4.0 / pairs * wy.norm_squared();
    Ok(NoiseVariance {
        variance: sigma_y_term + tau_term + cross_term + wy_term,
        sigma_y_term,
        tau_term,
        cross_term,
        wy_term,
    })
}
