//! Covariate-selection procedures producing the subset used by the
//! zero-estimator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    All,
    Gap,
    Fixed,
}

/// Where the largest gap in the ordered `β̂²` values was found.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GapDiagnostics {
    /// `β̂²` in ascending order (ties by original index).
    pub sorted: Vec<f64>,
    /// Position in `sorted` of the first value above the gap.
    pub position: usize,
    pub gap: f64,
}

/// A sorted set of 0-based covariate indices.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub method: SelectionMethod,
    pub diagnostics: Option<GapDiagnostics>,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Largest-gap thresholding of the estimated squared coefficients.
///
/// The values are ordered ascending, successive differences are formed, and
/// every coefficient at or above the upper end of the largest difference is
/// kept. When several differences tie for the maximum, the highest one wins,
/// so the returned set is the smallest candidate.
pub fn gap_select(beta_sq: &[f64]) -> Result<Selection> {
    let p = beta_sq.len();
    if p < 2 {
        return Err(Error::Selection(format!("gap selection needs at least 2 covariates, got {p}")));
    }
    if beta_sq.iter().any(|v| !v.is_finite()) {
        return Err(Error::Selection("non-finite coefficient estimate".into()));
    }
    let mut order: Vec<usize> = (0..p).collect();
    // stable: equal values keep index order
    order.sort_by(|&a, &b| beta_sq[a].total_cmp(&beta_sq[b]));
    let sorted: Vec<f64> = order.iter().map(|&j| beta_sq[j]).collect();

    let mut position = 1;
    let mut gap = f64::NEG_INFINITY;
    for k in 1..p {
        let d = sorted[k] - sorted[k - 1];
        if d >= gap {
            gap = d;
            position = k;
        }
    }
    let mut indices = order[position..].to_vec();
    indices.sort_unstable();
    Ok(Selection {
        indices,
        method: SelectionMethod::Gap,
        diagnostics: Some(GapDiagnostics { sorted, position, gap }),
    })
}

pub fn select_all(p: usize) -> Selection {
    Selection { indices: (0..p).collect(), method: SelectionMethod::All, diagnostics: None }
}

pub fn select_fixed(indices: &[usize], p: usize) -> Result<Selection> {
    if let Some(&j) = indices.iter().find(|&&j| j >= p) {
        return Err(Error::Selection(format!("index {j} out of range for p = {p}")));
    }
    let mut v = indices.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != indices.len() {
        return Err(Error::Selection("duplicate indices in fixed selection".into()));
    }
    Ok(Selection { indices: v, method: SelectionMethod::Fixed, diagnostics: None })
}

/// A selection procedure, applied to the estimated squared coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    All,
    Gap,
    Fixed(Vec<usize>),
}

impl Selector {
    pub fn select(&self, beta_sq: &[f64]) -> Result<Selection> {
        match self {
            Selector::All => Ok(select_all(beta_sq.len())),
            Selector::Gap => gap_select(beta_sq),
            Selector::Fixed(ix) => select_fixed(ix, beta_sq.len()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Selector::All => "all",
            Selector::Gap => "gap",
            Selector::Fixed(_) => "fixed",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn picks_values_above_largest_gap() {
        let s = gap_select(&[0.1, 0.2, 5.0, 5.1]).unwrap();
        assert_eq!(s.indices, vec![2, 3]);
        let d = s.diagnostics.unwrap();
        assert_eq!(d.position, 2);
        assert!((d.gap - 4.8).abs() < 1e-12);
    }

    #[test]
    fn all_equal_values_select_the_last() {
        let s = gap_select(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.indices, vec![3]);
    }

    #[test]
    fn two_values() {
        assert_eq!(gap_select(&[0.0, 10.0]).unwrap().indices, vec![1]);
        assert_eq!(gap_select(&[10.0, 0.0]).unwrap().indices, vec![0]);
    }

    #[test]
    fn unsorted_input_with_negative_estimates() {
        let s = gap_select(&[-0.01, 0.9, 0.02, 1.0, 0.0, 0.95]).unwrap();
        assert_eq!(s.indices, vec![1, 3, 5]);
    }

    #[test]
    fn rejects_short_or_bad_input() {
        assert!(matches!(gap_select(&[1.0]), Err(Error::Selection(_))));
        assert!(gap_select(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn fixed_and_all() {
        assert_eq!(select_all(3).indices, vec![0, 1, 2]);
        assert!(matches!(select_fixed(&[0, 4], 4), Err(Error::Selection(_))));
        assert!(select_fixed(&[1, 1], 4).is_err());
        assert_eq!(select_fixed(&[3, 0], 4).unwrap().indices, vec![0, 3]);
        assert_eq!(Selector::Fixed(vec![2, 1]).select(&[0.0; 4]).unwrap().indices, vec![1, 2]);
    }

    fn distinct(values: Vec<f64>) -> Vec<f64> {
        // spread the draws so that no two values or gaps coincide
        values.iter().enumerate().map(|(i, v)| v + i as f64 * 1e-7).collect()
    }

    proptest! {
        #[test]
        fn selected_strictly_dominate_unselected(v in prop::collection::vec(-1.0f64..10.0, 2..40)) {
            let v = distinct(v);
            let s = gap_select(&v).unwrap();
            prop_assert!(!s.indices.is_empty());
            let min_in = s.indices.iter().map(|&j| v[j]).fold(f64::INFINITY, f64::min);
            for j in 0..v.len() {
                if !s.indices.contains(&j) {
                    prop_assert!(v[j] < min_in);
                }
            }
        }

        #[test]
        fn permutation_equivariant(v in prop::collection::vec(0.0f64..5.0, 2..30), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let v = distinct(v);
            let mut perm: Vec<usize> = (0..v.len()).collect();
            perm.shuffle(&mut crate::rng::stream_rng(seed, 0));
            let permuted: Vec<f64> = perm.iter().map(|&k| v[k]).collect();
            let base = gap_select(&v).unwrap().indices;
            let mut mapped: Vec<usize> = gap_select(&permuted)
                .unwrap()
                .indices
                .iter()
                .map(|&k| perm[k])
                .collect();
            mapped.sort_unstable();
            prop_assert_eq!(base, mapped);
        }

        #[test]
        fn scale_invariant_membership(v in prop::collection::vec(0.0f64..5.0, 2..30), c in 0.5f64..4.0) {
            let v = distinct(v);
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert_eq!(gap_select(&v).unwrap().indices, gap_select(&scaled).unwrap().indices);
        }
    }
}
