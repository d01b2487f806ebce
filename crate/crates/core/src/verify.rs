//! Self-checks run by `signal-lab verify`: algebraic identities,
//! brute-force equivalences and zero-mean properties.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::covmodel::{CovariateModel, Marginal, Whitener};
use crate::rng::stream_rng;
use crate::ustat::{beta_sq_hat, tau_sq_naive, LabeledSample, WMatrix};
use crate::zeroest::{c_hat, g_values, ZeroStat};

/// Literal pair-enumeration forms of the estimators.
pub mod reference {
    use nalgebra::DMatrix;

    pub fn beta_sq(w: &DMatrix<f64>, j: usize) -> f64 {
        let n = w.nrows();
        let mut t = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                t += w[(a, j)] * w[(b, j)];
            }
        }
        t / (n * (n - 1) / 2) as f64
    }

    pub fn tau_sq(w: &DMatrix<f64>) -> f64 {
        let n = w.nrows();
        let mut t = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                t += w.row(a).dot(&w.row(b));
            }
        }
        t / (n * (n - 1) / 2) as f64
    }

    pub fn g(row: &[f64], subset: &[usize]) -> f64 {
        let mut t = 0.0;
        for (k, &a) in subset.iter().enumerate() {
            for &b in &subset[k + 1..] {
                t += row[a] * row[b];
            }
        }
        t
    }

    /// `C(n,2)⁻¹ Σ_{i1≠i2} W_i1ᵀ W_i2 g_i2`
    pub fn c_numerator(w: &DMatrix<f64>, g: &[f64]) -> f64 {
        let n = w.nrows();
        let mut t = 0.0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    t += w.row(a).dot(&w.row(b)) * g[b];
                }
            }
        }
        t / (n * (n - 1) / 2) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn random_instance(n: usize, p: usize, seed: u64) -> LabeledSample {
    let mut rng = stream_rng(seed, 0);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    LabeledSample::new(x, y).expect("finite draws")
}

/// Worst relative error between fast and pair-enumeration paths over random
/// instances with `n ≤ 30`, `p ≤ 8`.
pub fn brute_force_worst_error(instances: usize, seed: u64) -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..instances {
        let mut rng = stream_rng(seed, k as u64 + 1);
        let n = rng.random_range(2..=30);
        let p = rng.random_range(2..=8);
        let s = random_instance(n, p, seed.wrapping_add(k as u64));
        let w = WMatrix::new(&s);
        let b = beta_sq_hat(&w).expect("n >= 2");
        for j in 0..p {
            worst = worst.max(rel_err(b[j], reference::beta_sq(w.w(), j)));
        }
        worst = worst.max(rel_err(tau_sq_naive(&w).expect("n >= 2"), reference::tau_sq(w.w())));
        let subset: Vec<usize> = (0..p).filter(|_| rng.random_bool(0.7)).collect();
        let subset = if subset.len() < 2 { vec![0, 1] } else { subset };
        let z = ZeroStat::new(s.x(), &subset, 1.0).expect("valid subset");
        for i in 0..n {
            let row: Vec<f64> = s.x().row(i).iter().copied().collect();
            worst = worst.max(rel_err(z.z_values[i], reference::g(&row, &subset)));
        }
        let c = c_hat(&w, &z).expect("n >= 2").value;
        worst = worst.max(rel_err(c, reference::c_numerator(w.w(), z.z_values.as_slice())));
    }
    worst
}

pub fn run(quick: bool) -> Vec<CheckOutcome> {
    let scale = if quick { 1 } else { 5 };
    let mut out = Vec::new();

    let worst = brute_force_worst_error(20 * scale, 1);
    out.push(CheckOutcome {
        name: "fast paths equal pair enumeration",
        passed: worst <= 1e-10,
        detail: format!("worst relative error {worst:.2e} over {} instances", 20 * scale),
    });

    let mut worst = 0.0_f64;
    for k in 0..20 * scale {
        let s = random_instance(2 + k % 25, 1, 100 + k as u64);
        let w = WMatrix::new(&s);
        let col: Vec<f64> = w.w().column(0).iter().copied().collect();
        let nf = col.len() as f64;
        let mean = col.iter().sum::<f64>() / nf;
        let lhs = col.iter().map(|v| v * v).sum::<f64>() / nf
            - col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        worst = worst.max(rel_err(lhs, beta_sq_hat(&w).expect("n >= 2")[0]));
    }
    out.push(CheckOutcome {
        name: "moment-difference form equals pairwise form",
        passed: worst <= 1e-10,
        detail: format!("worst relative error {worst:.2e}"),
    });

    let mut worst = 0.0_f64;
    for k in 0..10 * scale {
        let mut rng = stream_rng(200 + k as u64, 0);
        let p = 2 + k % 5;
        let b = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = &b * b.transpose() + DMatrix::identity(p, p) * 0.3;
        let mean = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = DMatrix::from_fn(6, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = Whitener::new(&mean, &cov).expect("SPD by construction");
        let back = w.invert(&w.apply(&x).expect("shape")).expect("shape");
        worst = worst.max((back - &x).amax() / x.amax().max(1.0));
    }
    out.push(CheckOutcome {
        name: "whitening inverts",
        passed: worst <= 1e-10,
        detail: format!("worst relative error {worst:.2e}"),
    });

    let draws = 20_000 * scale;
    let model = CovariateModel::independent(Marginal::CenteredExponential, 6);
    let subset = [0, 1, 3, 5];
    let var_g = model.var_g(&subset).expect("valid subset").value;
    let x = model.sample_matrix(draws, &mut stream_rng(300, 0));
    let mean_g = g_values(&x, &subset).mean();
    let band = 4.0 * (var_g / draws as f64).sqrt();
    out.push(CheckOutcome {
        name: "zero-estimator has mean zero",
        passed: mean_g.abs() <= band,
        detail: format!("mean {mean_g:.3e}, band {band:.3e}"),
    });

    let mc = model.var_g_monte_carlo(&subset, draws, 301).expect("valid subset");
    let se = mc.std_error.unwrap_or(0.0);
    out.push(CheckOutcome {
        name: "Var[g] closed form matches simulation",
        passed: (mc.value - var_g).abs() <= 4.0 * se,
        detail: format!("closed form {var_g}, simulated {:.4} (se {se:.4})", mc.value),
    });
    out
}
