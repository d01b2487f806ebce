//! The known covariate distribution.
//!
//! Estimation assumes covariates that have been whitened, `X ↦ Σ^{-1/2}(X − μ)`,
//! so that `E[X] = 0` and `Var[X] = I`. This module owns the distribution
//! description, the whitening transform and the Monte-Carlo moment oracles used
//! to evaluate population quantities (the slope `β`, `A = E[WWᵀ]`, `θ_S`, ...).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};
use crate::ustat::LabeledSample;
use crate::zeroest::pair_product_sum;

/// Default number of draws for Monte-Carlo moment oracles.
pub const DEFAULT_MOMENT_DRAWS: usize = 1_000_000;

/// Smallest draw count accepted by [`population_moments`].
pub const MIN_MOMENT_DRAWS: usize = 10_000;

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = 1e-12;

/// Marginal law of each coordinate of an independent, standardized covariate vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    StandardNormal,
    /// `Exp(1) − 1`
    CenteredExponential,
}

impl Marginal {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Marginal::StandardNormal => rng.sample(StandardNormal),
            Marginal::CenteredExponential => rng.sample::<f64, _>(Exp1) - 1.0,
        }
    }

    pub fn third_moment(self) -> f64 {
        match self {
            Marginal::StandardNormal => 0.0,
            Marginal::CenteredExponential => 2.0,
        }
    }

    pub fn fourth_moment(self) -> f64 {
        match self {
            Marginal::StandardNormal => 3.0,
            Marginal::CenteredExponential => 9.0,
        }
    }
}

/// Source of raw covariate rows for distributions without a closed form.
pub trait CovariateSampler: Send + Sync {
    fn sample_row(&self, rng: &mut StreamRng, out: &mut [f64]);
}

impl<F> CovariateSampler for F
where
    F: Fn(&mut StreamRng, &mut [f64]) + Send + Sync,
{
    fn sample_row(&self, rng: &mut StreamRng, out: &mut [f64]) {
        self(rng, out)
    }
}

#[derive(Clone)]
pub enum CovariateKind {
    IndependentStandardized(Marginal),
    GeneralGaussian { cholesky: DMatrix<f64> },
    Empirical(Arc<dyn CovariateSampler>),
}

impl fmt::Debug for CovariateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovariateKind::IndependentStandardized(m) => {
                f.debug_tuple("IndependentStandardized").field(m).finish()
            }
            CovariateKind::GeneralGaussian { .. } => f.write_str("GeneralGaussian"),
            CovariateKind::Empirical(_) => f.write_str("Empirical"),
        }
    }
}

/// Draw count and seed used when a population quantity has to be simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleSettings {
    pub draws: usize,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { draws: DEFAULT_MOMENT_DRAWS, seed: 0x5eed }
    }
}

/// A covariate law with known mean and covariance. Immutable once built.
#[derive(Debug, Clone)]
pub struct CovariateModel {
    kind: CovariateKind,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    whitener: Whitener,
    oracle: OracleSettings,
}

impl CovariateModel {
    /// `p` i.i.d. coordinates with the given zero-mean, unit-variance marginal.
    pub fn independent(marginal: Marginal, p: usize) -> Self {
        Self {
            kind: CovariateKind::IndependentStandardized(marginal),
            mean: DVector::zeros(p),
            covariance: DMatrix::identity(p, p),
            whitener: Whitener::identity(p),
            oracle: OracleSettings::default(),
        }
    }

    pub fn gaussian(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let whitener = Whitener::new(&mean, &covariance)?;
        let cholesky = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Whitening("covariance is not positive definite".into()))?
            .l();
        Ok(Self {
            kind: CovariateKind::GeneralGaussian { cholesky },
            mean,
            covariance,
            whitener,
            oracle: OracleSettings::default(),
        })
    }

    /// A law known only through a sampler plus its first two moments.
    pub fn empirical(
        sampler: Arc<dyn CovariateSampler>,
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let whitener = Whitener::new(&mean, &covariance)?;
        Ok(Self {
            kind: CovariateKind::Empirical(sampler),
            mean,
            covariance,
            whitener,
            oracle: OracleSettings::default(),
        })
    }

    pub fn with_oracle(mut self, oracle: OracleSettings) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn kind(&self) -> &CovariateKind {
        &self.kind
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn whitener(&self) -> &Whitener {
        &self.whitener
    }

    pub fn oracle(&self) -> OracleSettings {
        self.oracle
    }

    /// True when rows drawn from this model are already whitened.
    pub fn is_whitened(&self) -> bool {
        matches!(self.kind, CovariateKind::IndependentStandardized(_))
    }

    /// One raw (unwhitened) covariate row.
    pub fn sample_row(&self, rng: &mut StreamRng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.p());
        match &self.kind {
            CovariateKind::IndependentStandardized(m) => {
                for v in out.iter_mut() {
                    *v = m.sample(rng);
                }
            }
            CovariateKind::GeneralGaussian { cholesky } => {
                let z = DVector::from_fn(self.p(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = cholesky * z + &self.mean;
                out.copy_from_slice(x.as_slice());
            }
            CovariateKind::Empirical(s) => s.sample_row(rng, out),
        }
    }

    /// `n` raw rows as an `n × p` matrix.
    pub fn sample_matrix(&self, n: usize, rng: &mut StreamRng) -> DMatrix<f64> {
        let p = self.p();
        let mut x = DMatrix::zeros(n, p);
        let mut row = vec![0.0; p];
        for i in 0..n {
            self.sample_row(rng, &mut row);
            for (j, v) in row.iter().enumerate() {
                x[(i, j)] = *v;
            }
        }
        x
    }

    /// `Var[g_S(X)]` for whitened `X`, where `g_S(x) = Σ_{j<j'∈S} x_j x_j'`.
    ///
    /// Exact (`|S|(|S|−1)/2`) when whitened coordinates are independent, which
    /// holds for the independent and Gaussian kinds; simulated otherwise.
    pub fn var_g(&self, subset: &[usize]) -> Result<VarG> {
        check_subset(subset, self.p())?;
        match self.kind {
            CovariateKind::IndependentStandardized(_) | CovariateKind::GeneralGaussian { .. } => {
                let m = subset.len() as f64;
                Ok(VarG { value: m * (m - 1.0) / 2.0, std_error: None })
            }
            CovariateKind::Empirical(_) => {
                self.var_g_monte_carlo(subset, self.oracle.draws, self.oracle.seed)
            }
        }
    }

    /// Simulated `Var[g_S(X)]` with the standard error of the sample variance.
    pub fn var_g_monte_carlo(&self, subset: &[usize], draws: usize, seed: u64) -> Result<VarG> {
        check_subset(subset, self.p())?;
        if draws < 2 {
            return Err(Error::Moment("at least two draws are required".into()));
        }
        let mut rng = stream_rng(seed, 0);
        let mut raw = vec![0.0; self.p()];
        let mut values = Vec::with_capacity(draws);
        for _ in 0..draws {
            self.sample_row(&mut rng, &mut raw);
            let x = self.whitener.apply_row(&raw);
            values.push(pair_product_sum(subset.iter().map(|&j| x[j])));
        }
        let nf = draws as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
        let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
        let value = m2 * nf / (nf - 1.0);
        if !value.is_finite() {
            return Err(Error::data("non-finite covariate draws"));
        }
        Ok(VarG { value, std_error: Some(((m4 - m2 * m2).max(0.0) / nf).sqrt()) })
    }
}

pub(crate) fn check_subset(subset: &[usize], p: usize) -> Result<()> {
    if subset.len() < 2 {
        return Err(Error::DegenerateSubset { size: subset.len() });
    }
    if let Some(&j) = subset.iter().find(|&&j| j >= p) {
        return Err(Error::Selection(format!("index {j} out of range for p = {p}")));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Selection("subset contains duplicate indices".into()));
    }
    Ok(())
}

/// `Var[g_S(X)]`, with a standard error when it was simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarG {
    pub value: f64,
    pub std_error: Option<f64>,
}

/// The affine map `x ↦ Σ^{-1/2}(x − μ)` with the symmetric inverse root.
#[derive(Debug, Clone)]
pub struct Whitener {
    mean: DVector<f64>,
    inv_sqrt: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    identity: bool,
}

impl Whitener {
    pub fn identity(p: usize) -> Self {
        Self {
            mean: DVector::zeros(p),
            inv_sqrt: DMatrix::identity(p, p),
            sqrt: DMatrix::identity(p, p),
            identity: true,
        }
    }

    pub fn new(mean: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if covariance.nrows() != p || covariance.ncols() != p {
            return Err(Error::Shape(format!(
                "mean has length {p} but covariance is {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if p == 0 {
            return Err(Error::Shape("empty covariance".into()));
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::Whitening("covariance has non-finite entries".into()));
        }
        let scale = covariance.amax();
        let asym = (covariance - covariance.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Whitening(format!("covariance is not symmetric (max |Σ - Σᵀ| = {asym:e})")));
        }
        let eig = SymmetricEigen::new(covariance.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= EIGEN_FLOOR * max {
            return Err(Error::Whitening(format!(
                "covariance is not positive definite (eigenvalues in [{min:e}, {max:e}])"
            )));
        }
        let v = &eig.eigenvectors;
        let root = |f: fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
            let m = v * d * v.transpose();
            // symmetrize away rounding
            (&m + m.transpose()) * 0.5
        };
        let identity = mean.iter().all(|&m| m == 0.0) && *covariance == DMatrix::identity(p, p);
        Ok(Self {
            mean: mean.clone(),
            inv_sqrt: root(|l| 1.0 / l.sqrt()),
            sqrt: root(f64::sqrt),
            identity,
        })
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    /// `Σ^{-1/2}`.
    pub fn inverse_root(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn apply_row(&self, raw: &[f64]) -> DVector<f64> {
        let centered = DVector::from_iterator(raw.len(), raw.iter().zip(self.mean.iter()).map(|(x, m)| x - m));
        if self.identity {
            return centered;
        }
        &self.inv_sqrt * centered
    }

    /// Whitens every row of an `n × p` matrix.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.p() {
            return Err(Error::Shape(format!("expected {} covariates, got {}", self.p(), x.ncols())));
        }
        if self.identity {
            return Ok(x.clone());
        }
        let mut centered = x.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        Ok(centered * &self.inv_sqrt)
    }

    /// Inverse map `z ↦ Σ^{1/2} z + μ`, row-wise.
    pub fn invert(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.p() {
            return Err(Error::Shape(format!("expected {} covariates, got {}", self.p(), z.ncols())));
        }
        let mut x = z * &self.sqrt;
        for mut row in x.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(x)
    }
}

/// Whitens the covariates of `raw`; responses are untouched.
pub fn whiten(raw: &LabeledSample, mean: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<LabeledSample> {
    let w = Whitener::new(mean, covariance)?;
    let x = w.apply(raw.x())?;
    Ok(LabeledSample::from_parts_unchecked(x, raw.y().clone()))
}

/// Key of a population vector stored in [`MomentSet::theta`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ThetaKey {
    /// `θ_S = E[W g_S(X)]` for a sorted subset.
    Subset(Vec<usize>),
    /// `E[W_j (Y − α)]`, the vector that enters the variance of `σ̂²`.
    Wy,
}

impl ThetaKey {
    pub fn subset(indices: &[usize]) -> Self {
        let mut v = indices.to_vec();
        v.sort_unstable();
        ThetaKey::Subset(v)
    }
}

/// Population moments of `(X, Y)` in whitened coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    /// Slope of the best linear predictor, `E[W]`.
    pub beta: DVector<f64>,
    /// Intercept, `E[Y]` under whitening.
    pub alpha: f64,
    /// `E[WWᵀ]`
    pub a: Option<DMatrix<f64>>,
    pub theta: BTreeMap<ThetaKey, DVector<f64>>,
    /// `E[(Y − α)⁴]`
    pub mu4: Option<f64>,
    /// `π_j = E[(Y − α)² W_j]`
    pub pi: Option<DVector<f64>>,
    pub sigma_y_sq: f64,
    /// Monte-Carlo standard errors of `beta`, when simulated.
    pub beta_std_error: Option<DVector<f64>>,
}

impl MomentSet {
    pub fn new(beta: DVector<f64>, alpha: f64, sigma_y_sq: f64) -> Self {
        Self {
            beta,
            alpha,
            a: None,
            theta: BTreeMap::new(),
            mu4: None,
            pi: None,
            sigma_y_sq,
            beta_std_error: None,
        }
    }

    pub fn with_a(mut self, a: DMatrix<f64>) -> Self {
        self.a = Some(a);
        self
    }

    /// Sets `μ₄`, `π` and `E[W(Y − α)]`.
    pub fn with_noise_moments(mut self, mu4: f64, pi: DVector<f64>, wy: DVector<f64>) -> Self {
        self.mu4 = Some(mu4);
        self.pi = Some(pi);
        self.theta.insert(ThetaKey::Wy, wy);
        self
    }

    pub fn with_theta(mut self, subset: &[usize], theta: DVector<f64>) -> Self {
        self.theta.insert(ThetaKey::subset(subset), theta);
        self
    }

    pub fn theta_for(&self, subset: &[usize]) -> Option<&DVector<f64>> {
        self.theta.get(&ThetaKey::subset(subset))
    }

    pub fn wy(&self) -> Option<&DVector<f64>> {
        self.theta.get(&ThetaKey::Wy)
    }

    /// `τ² = ‖β‖²`.
    pub fn tau_sq(&self) -> f64 {
        self.beta.norm_squared()
    }

    /// `σ² = σ_Y² − τ²`.
    pub fn sigma_sq(&self) -> f64 {
        self.sigma_y_sq - self.tau_sq()
    }
}

/// Conditional law of `Y` given a raw covariate row.
pub trait ResponseLaw: Sync {
    fn sample(&self, x: &[f64], rng: &mut StreamRng) -> f64;
}

impl<F> ResponseLaw for F
where
    F: Fn(&[f64], &mut StreamRng) -> f64 + Sync,
{
    fn sample(&self, x: &[f64], rng: &mut StreamRng) -> f64 {
        self(x, rng)
    }
}

const MOMENT_BATCH: usize = 512;

/// Monte-Carlo estimate of every population moment the variance formulas
/// and oracle coefficients need, using `draws` pairs `(X, Y)`.
///
/// `θ_S` is computed for each subset in `subsets`. Deterministic in `seed`.
pub fn population_moments(
    model: &CovariateModel,
    response: &dyn ResponseLaw,
    draws: usize,
    subsets: &[Vec<usize>],
    seed: u64,
) -> Result<MomentSet> {
    if draws < MIN_MOMENT_DRAWS {
        return Err(Error::Moment(format!("at least {MIN_MOMENT_DRAWS} draws are required, got {draws}")));
    }
    for s in subsets {
        check_subset(s, model.p())?;
    }
    let p = model.p();
    let nf = draws as f64;
    let mut raw = vec![0.0; p];

    let mut draw = |rng: &mut StreamRng| -> Result<(DVector<f64>, f64)> {
        model.sample_row(rng, &mut raw);
        let y = response.sample(&raw, rng);
        let x = model.whitener.apply_row(&raw);
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite draw from the covariate or response law"));
        }
        Ok((x, y))
    };

    // first pass: the intercept, so that the second pass can centre exactly
    let mut rng = stream_rng(seed, 0);
    let mut y_sum = 0.0;
    for _ in 0..draws {
        y_sum += draw(&mut rng)?.1;
    }
    let alpha = y_sum / nf;

    let mut rng = stream_rng(seed, 0);
    let mut w_sum = DVector::zeros(p);
    let mut w_sq_sum = DVector::zeros(p);
    let mut a = DMatrix::zeros(p, p);
    let mut pi = DVector::zeros(p);
    let mut wy = DVector::zeros(p);
    let mut theta: Vec<DVector<f64>> = vec![DVector::zeros(p); subsets.len()];
    let (mut c2, mut c4) = (0.0, 0.0);
    let mut batch = DMatrix::zeros(MOMENT_BATCH, p);
    let mut filled = 0;

    for k in 0..draws {
        let (x, y) = draw(&mut rng)?;
        let w = &x * y;
        let yc = y - alpha;
        c2 += yc * yc;
        c4 += yc.powi(4);
        w_sum += &w;
        w_sq_sum += w.component_mul(&w);
        pi.axpy(yc * yc, &w, 1.0);
        wy.axpy(yc, &w, 1.0);
        for (t, s) in theta.iter_mut().zip(subsets) {
            let g = pair_product_sum(s.iter().map(|&j| x[j]));
            t.axpy(g, &w, 1.0);
        }
        batch.row_mut(filled).copy_from(&w.transpose());
        filled += 1;
        if filled == MOMENT_BATCH || k + 1 == draws {
            let rows = batch.rows(0, filled);
            a.gemm_tr(1.0, &rows, &rows, 1.0);
            filled = 0;
        }
    }

    let beta = w_sum / nf;
    let beta_var = (w_sq_sum / nf) - beta.component_mul(&beta);
    let beta_std_error = beta_var.map(|v| (v.max(0.0) / nf).sqrt());
    let mut out = MomentSet::new(beta, alpha, c2 / nf)
        .with_a(a / nf)
        .with_noise_moments(c4 / nf, pi / nf, wy / nf);
    out.beta_std_error = Some(beta_std_error);
    for (t, s) in theta.into_iter().zip(subsets) {
        out = out.with_theta(s, t / nf);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream_rng(seed, 1);
        let b = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        &b * b.transpose() + DMatrix::identity(p, p) * 0.5
    }

    #[test]
    fn identity_whitening_is_identity() {
        let mut rng = stream_rng(1, 0);
        let x = DMatrix::from_fn(6, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_element(6, 1.0);
        let s = LabeledSample::new(x.clone(), y).unwrap();
        let out = whiten(&s, &DVector::zeros(3), &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(out.x(), &x);
        assert_eq!(out.y(), s.y());
    }

    #[test]
    fn scalar_whitening() {
        let w = Whitener::new(&DVector::from_element(1, 2.0), &DMatrix::from_element(1, 1, 4.0)).unwrap();
        let z = w.apply(&DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert!((z[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn whitening_matches_eigen_root_and_inverts() {
        let p = 3;
        let cov = spd(p, 4);
        let mut rng = stream_rng(4, 2);
        let mean = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = DMatrix::from_fn(6, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = Whitener::new(&mean, &cov).unwrap();
        // the inverse root squared must invert the covariance
        let r = w.inverse_root();
        let prod = r * &cov * r;
        assert!((prod - DMatrix::identity(p, p)).amax() < 1e-10);
        let z = w.apply(&x).unwrap();
        let back = w.invert(&z).unwrap();
        assert!((back - &x).amax() < 1e-10 * x.amax().max(1.0));
    }

    #[test]
    fn whitening_rejects_bad_covariances() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(Whitener::new(&DVector::zeros(2), &singular), Err(Error::Whitening(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.1, 2.0]);
        assert!(matches!(Whitener::new(&DVector::zeros(2), &asym), Err(Error::Whitening(_))));
        assert!(matches!(
            Whitener::new(&DVector::zeros(3), &DMatrix::identity(2, 2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn var_g_closed_form() {
        let m = CovariateModel::independent(Marginal::StandardNormal, 2);
        assert_eq!(m.var_g(&[0, 1]).unwrap().value, 1.0);
        let m = CovariateModel::independent(Marginal::CenteredExponential, 300);
        let all: Vec<usize> = (0..300).collect();
        assert_eq!(m.var_g(&all).unwrap().value, 44850.0);
        assert!(matches!(
            CovariateModel::independent(Marginal::StandardNormal, 2).var_g(&[0]),
            Err(Error::DegenerateSubset { size: 1 })
        ));
        assert!(m.var_g(&[0, 300]).is_err());
        assert!(m.var_g(&[4, 4]).is_err());
    }

    #[test]
    fn var_g_monte_carlo_agrees_for_centered_exponential() {
        let m = CovariateModel::independent(Marginal::CenteredExponential, 5);
        let s = [0, 2, 3, 4];
        let exact = m.var_g(&s).unwrap().value;
        let mc = m.var_g_monte_carlo(&s, 200_000, 17).unwrap();
        let se = mc.std_error.unwrap();
        assert!((mc.value - exact).abs() <= 4.0 * se, "{} vs {exact} (se {se})", mc.value);
    }

    #[test]
    fn empirical_model_uses_monte_carlo() {
        // correlated Gaussian through the sampler interface: after whitening
        // the coordinates are independent standard normals, so Var[g] = 1
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let l = cov.clone().cholesky().unwrap().l();
        let sampler = move |rng: &mut StreamRng, out: &mut [f64]| {
            let z = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            out.copy_from_slice((&l * z).as_slice());
        };
        let m = CovariateModel::empirical(Arc::new(sampler), DVector::zeros(2), cov)
            .unwrap()
            .with_oracle(OracleSettings { draws: 100_000, seed: 3 });
        let v = m.var_g(&[0, 1]).unwrap();
        let se = v.std_error.unwrap();
        assert!((v.value - 1.0).abs() <= 4.0 * se);
    }

    #[test]
    fn zero_response_moments() {
        let m = CovariateModel::independent(Marginal::StandardNormal, 3);
        let zero = |_: &[f64], _: &mut StreamRng| 0.0;
        let ms = population_moments(&m, &zero, MIN_MOMENT_DRAWS, &[vec![0, 1]], 1).unwrap();
        assert!(ms.beta.iter().all(|&v| v == 0.0));
        assert!(ms.a.as_ref().unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(ms.mu4, Some(0.0));
        assert!(ms.pi.as_ref().unwrap().iter().all(|&v| v == 0.0));
        assert!(ms.theta_for(&[1, 0]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moment_oracle_rejects_small_draw_counts() {
        let m = CovariateModel::independent(Marginal::StandardNormal, 2);
        let f = |x: &[f64], _: &mut StreamRng| x[0];
        assert!(matches!(population_moments(&m, &f, 100, &[], 1), Err(Error::Moment(_))));
        let bad = |_: &[f64], _: &mut StreamRng| f64::NAN;
        assert!(matches!(population_moments(&m, &bad, MIN_MOMENT_DRAWS, &[], 1), Err(Error::Data { .. })));
    }

    #[test]
    fn gaussian_linear_response_moments() {
        let m = CovariateModel::independent(Marginal::StandardNormal, 2);
        let f = |x: &[f64], _: &mut StreamRng| x[0];
        let ms = population_moments(&m, &f, 400_000, &[], 9).unwrap();
        let se = ms.beta_std_error.as_ref().unwrap();
        assert!((ms.beta[0] - 1.0).abs() <= 4.0 * se[0]);
        assert!(ms.beta[1].abs() <= 4.0 * se[1]);
        // A[0,0] = E[X⁴] = 3 for a standard normal; sd of X⁴ is sqrt(96)
        let a = ms.a.as_ref().unwrap();
        assert!((a[(0, 0)] - 3.0).abs() <= 4.0 * (96.0f64 / 400_000.0).sqrt());
        assert!(ms.sigma_y_sq >= ms.tau_sq() - 0.01);
        let asym = (a - a.transpose()).amax();
        assert!(asym < 1e-12);
    }

    #[test]
    fn moment_oracle_is_deterministic() {
        let m = CovariateModel::independent(Marginal::CenteredExponential, 3);
        let f = |x: &[f64], rng: &mut StreamRng| x[0] + x[1] * x[2] + rng.sample::<f64, _>(StandardNormal);
        let a = population_moments(&m, &f, MIN_MOMENT_DRAWS, &[vec![0, 1, 2]], 5).unwrap();
        let b = population_moments(&m, &f, MIN_MOMENT_DRAWS, &[vec![0, 1, 2]], 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_model_whitens_to_zero_mean() {
        let cov = spd(3, 8);
        let mean = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let m = CovariateModel::gaussian(mean, cov).unwrap();
        let mut rng = stream_rng(2, 0);
        let x = m.sample_matrix(20_000, &mut rng);
        let z = m.whitener().apply(&x).unwrap();
        let mean_z = z.row_mean();
        assert!(mean_z.amax() < 4.0 / (20_000f64).sqrt());
        let cov_z = (z.transpose() * &z) / 20_000.0;
        assert!((cov_z - DMatrix::identity(3, 3)).amax() < 0.05);
    }
}
