//! Variance reduction with zero-estimators.
//!
//! For whitened covariates and any subset `S` of at least two indices,
//! `g_S(x) = Σ_{j<j'∈S} x_j x_j'` has mean zero, so `Z = mean_i g_S(X_i)` can
//! be subtracted from `τ̂²` with any coefficient without introducing bias.
//! The variance-minimizing coefficient is `c* = 2βᵀθ_S / Var[g_S(X)]` with
//! `θ_S = E[W g_S(X)]`; it is estimated by an unbiased U-statistic `ĉ*`.

use nalgebra::{DMatrix, DVector};

use crate::covmodel::{check_subset, CovariateModel, MomentSet};
use crate::error::{Error, Result};
use crate::select::Selector;
use crate::ustat::{EstimateBundle, LabeledSample, Method, WMatrix, ZeroCorrection};

/// `Σ_{j<j'} v_j v_j'` via `((Σ v)² − Σ v²) / 2`.
pub fn pair_product_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (s, q) = values.into_iter().fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
    (s * s - q) / 2.0
}

/// `g_S(x_i)` for every row of `x`.
pub fn g_values(x: &DMatrix<f64>, subset: &[usize]) -> DVector<f64> {
    let n = x.nrows();
    let mut s = DVector::zeros(n);
    let mut q = DVector::zeros(n);
    for &j in subset {
        let col = x.column(j);
        s += col;
        q += col.component_mul(&col);
    }
    s.zip_map(&q, |s, q| (s * s - q) / 2.0)
}

/// The zero-estimator `Z = mean_i g_S(X_i)` on one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroStat {
    pub subset: Vec<usize>,
    pub z_values: DVector<f64>,
    pub z_bar: f64,
    /// Known `Var[g_S(X)]`.
    pub var_g: f64,
}

impl ZeroStat {
    /// `x` must be whitened. A single row is allowed.
    pub fn new(x: &DMatrix<f64>, subset: &[usize], var_g: f64) -> Result<Self> {
        check_subset(subset, x.ncols())?;
        if !(var_g > 0.0) || !var_g.is_finite() {
            return Err(Error::Moment(format!("Var[g] must be positive and finite, got {var_g}")));
        }
        if x.nrows() == 0 {
            return Err(Error::SampleSize { n: 0, required: 1 });
        }
        let mut subset = subset.to_vec();
        subset.sort_unstable();
        let z_values = g_values(x, &subset);
        let z_bar = z_values.mean();
        Ok(Self { subset, z_values, z_bar, var_g })
    }

    /// `Var(Z) = Var[g(X)] / n`.
    pub fn var_z(&self) -> f64 {
        self.var_g / self.z_values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    /// Population `c*`.
    Oracle,
    /// U-statistic estimate `ĉ*`.
    UStat,
    /// Bootstrap approximation `c̃*`.
    Bootstrap,
}

/// Multiplier applied to a zero-estimator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Coefficient {
    pub value: f64,
    pub kind: CoefficientKind,
}

impl Coefficient {
    pub fn new(value: f64, kind: CoefficientKind) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Moment(format!("non-finite coefficient {value}")));
        }
        Ok(Self { value, kind })
    }

    pub fn fixed(value: f64) -> Self {
        Self { value, kind: CoefficientKind::Oracle }
    }
}

/// `ĉ* = [2/(n(n−1)) Σ_{i1≠i2} W_i1ᵀ W_i2 g(X_i2)] / Var[g]`.
///
/// The ordered-pair sum is `Σ_j [S_j (Σ_i W_ij g_i) − Σ_i W_ij² g_i]`.
pub fn c_hat(w: &WMatrix, zstat: &ZeroStat) -> Result<Coefficient> {
    let n = w.n();
    if n < 2 {
        return Err(Error::SampleSize { n, required: 2 });
    }
    if zstat.z_values.len() != n {
        return Err(Error::Shape(format!(
            "zero statistic has {} values for {n} observations",
            zstat.z_values.len()
        )));
    }
    let g = &zstat.z_values;
    let mut total = 0.0;
    for j in 0..w.p() {
        let col = w.w().column(j);
        let wg = col.dot(g);
        let w2g: f64 = col.iter().zip(g.iter()).map(|(v, gi)| v * v * gi).sum();
        total += w.column_sums()[j] * wg - w2g;
    }
    let numerator = 2.0 * total / (n * (n - 1)) as f64;
    Coefficient::new(numerator / zstat.var_g, CoefficientKind::UStat)
}

/// `c* = 2βᵀθ_S / Var[g_S]` from population moments.
pub fn c_oracle(moments: &MomentSet, subset: &[usize], var_g: f64) -> Result<Coefficient> {
    if !(var_g > 0.0) {
        return Err(Error::Moment(format!("Var[g] must be positive, got {var_g}")));
    }
    let theta = moments
        .theta_for(subset)
        .ok_or_else(|| Error::Moment(format!("theta for subset {subset:?} is missing")))?;
    if theta.len() != moments.beta.len() {
        return Err(Error::Shape("theta and beta lengths differ".into()));
    }
    Coefficient::new(2.0 * moments.beta.dot(theta) / var_g, CoefficientKind::Oracle)
}

/// `τ̂² − c·Z`.
pub fn improve(tau_naive: f64, c: &Coefficient, zstat: &ZeroStat) -> f64 {
    tau_naive - c.value * zstat.z_bar
}

/// Naive estimate followed by the zero-estimator correction over the subset
/// chosen by `selector` from the estimated squared coefficients.
///
/// `sample` must already be whitened with respect to `model`. If fewer than
/// two covariates are selected, the naive estimate is returned with the
/// `no_zero_estimator` flag set.
pub fn algorithm1(sample: &LabeledSample, selector: &Selector, model: &CovariateModel) -> Result<EstimateBundle> {
    if model.p() != sample.p() {
        return Err(Error::Shape(format!(
            "model has {} covariates, sample has {}",
            model.p(),
            sample.p()
        )));
    }
    let w = WMatrix::new(sample);
    let mut bundle = EstimateBundle::naive_from_w(sample, &w)?;
    let selection = selector.select(&bundle.beta_sq_hat)?;
    let zero = if selection.len() < 2 {
        ZeroCorrection {
            subset: selection.indices,
            z_bar: 0.0,
            coefficient: 0.0,
            improved: bundle.tau_sq_hat,
            no_zero_estimator: true,
        }
    } else {
        let var_g = model.var_g(&selection.indices)?.value;
        let zstat = ZeroStat::new(sample.x(), &selection.indices, var_g)?;
        let c = c_hat(&w, &zstat)?;
        ZeroCorrection {
            improved: improve(bundle.tau_sq_hat, &c, &zstat),
            subset: zstat.subset,
            z_bar: zstat.z_bar,
            coefficient: c.value,
            no_zero_estimator: false,
        }
    };
    bundle.method = Method::ZeroEstimator;
    bundle.zero = Some(zero);
    Ok(bundle)
}
