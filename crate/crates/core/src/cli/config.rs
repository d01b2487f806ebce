//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::boot::DEFAULT_BOOTSTRAP_REPLICATES;
use crate::covmodel::{Marginal, DEFAULT_MOMENT_DRAWS};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::select::Selector;
use crate::sim::{Scenario, SuiteEntry, DEFAULT_K, DEFAULT_REPS};

pub const DEFAULT_N: usize = 300;
pub const DEFAULT_P: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Estimate,
    Simulate,
    Verify,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    eta: Vec<f64>,
    #[serde(default)]
    tau_sq: Vec<f64>,
    n: Option<usize>,
    p: Option<usize>,
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    grid: Option<RawGrid>,
    estimators: Option<Vec<String>>,
    selector: Option<String>,
    fixed_set: Option<Vec<usize>>,
    bootstrap_m: Option<usize>,
    reps: Option<usize>,
    base_seed: Option<u64>,
    moment_draws: Option<usize>,
    output: Option<PathBuf>,
    covariates: Option<Marginal>,
    noise_sd: Option<f64>,
    center_response: Option<bool>,
    data: Option<PathBuf>,
    mu: Option<PathBuf>,
    sigma: Option<PathBuf>,
    assume_whitened: Option<bool>,
}

/// Sizes and parameter values of a simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub eta: Vec<f64>,
    pub tau_sq: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub k: usize,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid: Grid,
    pub estimators: Vec<SuiteEntry>,
    pub selector: Selector,
    pub bootstrap_m: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub moment_draws: usize,
    pub output: Option<PathBuf>,
    pub covariates: Marginal,
    pub noise_sd: f64,
    pub center_response: bool,
    pub data: Option<PathBuf>,
    pub mu: Option<PathBuf>,
    pub sigma: Option<PathBuf>,
    pub assume_whitened: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub base_seed: Option<u64>,
    pub output: Option<PathBuf>,
}

pub fn parse_selector(name: &str, fixed: Option<&[usize]>) -> Result<Selector> {
    match (name, fixed) {
        ("gap", _) => Ok(Selector::Gap),
        ("all", _) => Ok(Selector::All),
        ("fixed", Some(ix)) => Ok(Selector::Fixed(ix.to_vec())),
        ("fixed", None) => Err(Error::config("fixed_set", "selector `fixed` requires `fixed_set`")),
        (other, _) => Err(Error::config("selector", format!("unknown selector `{other}`; available: gap, all, fixed"))),
    }
}

/// Reads and validates a JSON config file.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?;
    let mode = raw.mode.unwrap_or(Mode::Simulate);

    let grid = match raw.grid {
        Some(g) => Grid {
            eta: g.eta,
            tau_sq: g.tau_sq,
            n: g.n.unwrap_or(DEFAULT_N),
            p: g.p.unwrap_or(DEFAULT_P),
            k: g.k.unwrap_or(DEFAULT_K),
        },
        None => Grid { eta: vec![], tau_sq: vec![], n: DEFAULT_N, p: DEFAULT_P, k: DEFAULT_K },
    };
    if mode == Mode::Simulate {
        if grid.eta.is_empty() {
            return Err(Error::config("grid.eta", "the grid needs at least one eta value"));
        }
        if grid.tau_sq.is_empty() {
            return Err(Error::config("grid.tau_sq", "the grid needs at least one tau_sq value"));
        }
    }

    let selector = parse_selector(raw.selector.as_deref().unwrap_or("gap"), raw.fixed_set.as_deref())?;
    let bootstrap_m = raw.bootstrap_m.unwrap_or(DEFAULT_BOOTSTRAP_REPLICATES);
    if bootstrap_m < 2 {
        return Err(Error::config("bootstrap_m", "at least 2 bootstrap replicates are required"));
    }
    let names = raw.estimators.unwrap_or_else(|| vec!["naive".into(), "naive_tg".into(), "naive_th".into()]);
    if names.is_empty() {
        return Err(Error::config("estimators", "the estimator suite is empty"));
    }
    let estimators = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            SuiteEntry::from_name(n, &selector, bootstrap_m).map_err(|e| match e {
                Error::Config { message, .. } => Error::config(format!("estimators[{i}]"), message),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let reps = raw.reps.unwrap_or(DEFAULT_REPS);
    if reps == 0 {
        return Err(Error::config("reps", "at least one replicate is required"));
    }
    let data = raw.data;
    if mode == Mode::Estimate && data.is_none() {
        return Err(Error::config("data", "estimate mode requires a data file"));
    }
    let config = RunConfig {
        mode,
        grid,
        estimators,
        selector,
        bootstrap_m,
        reps,
        base_seed: overrides.base_seed.or(raw.base_seed).unwrap_or(0),
        moment_draws: raw.moment_draws.unwrap_or(DEFAULT_MOMENT_DRAWS),
        output: overrides.output.clone().or(raw.output),
        covariates: raw.covariates.unwrap_or(Marginal::CenteredExponential),
        noise_sd: raw.noise_sd.unwrap_or(1.0),
        center_response: raw.center_response.unwrap_or(true),
        data,
        mu: raw.mu,
        sigma: raw.sigma,
        assume_whitened: raw.assume_whitened.unwrap_or(false),
    };
    if mode == Mode::Simulate {
        for s in config.scenarios() {
            s.validate()?;
        }
    }
    Ok(config)
}

impl RunConfig {
    /// Grid cells in output order: `tau_sq` outer, `eta` inner.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &tau_sq in &self.grid.tau_sq {
            for &eta in &self.grid.eta {
                let cell = out.len() as u64;
                let mut s = Scenario::new(self.grid.n, self.grid.p, tau_sq, eta)
                    .with_k(self.grid.k)
                    .with_reps(self.reps)
                    .with_seed(derive_seed(self.base_seed, cell));
                s.covariates = self.covariates;
                s.noise_sd = self.noise_sd;
                s.center_response = self.center_response;
                out.push(s);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(r#"{"grid": {"eta": [0.5], "tau_sq": [1.0]}}"#, &Overrides::default()).unwrap();
        assert_eq!(c.mode, Mode::Simulate);
        assert_eq!((c.grid.n, c.grid.p, c.grid.k), (300, 300, 6));
        assert_eq!(c.reps, 100);
        assert_eq!(c.bootstrap_m, 100);
        assert_eq!(c.selector, Selector::Gap);
        let names: Vec<&str> = c.estimators.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["naive", "naive_tg", "naive_th"]);
        assert_eq!(c.scenarios().len(), 1);
    }

    #[test]
    fn unknown_estimator_lists_registry() {
        let e = parse_config_str(
            r#"{"grid": {"eta": [0.5], "tau_sq": [1.0]}, "estimators": ["naive", "eigenprism"]}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        match e {
            Error::Config { key, message } => {
                assert_eq!(key, "estimators[1]");
                assert!(message.contains("naive_tg"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_grid_and_unknown_keys_are_rejected() {
        let o = Overrides::default();
        assert!(matches!(parse_config_str(r#"{"grid": {"eta": [], "tau_sq": [1]}}"#, &o), Err(Error::Config { .. })));
        assert!(matches!(parse_config_str(r#"{}"#, &o), Err(Error::Config { .. })));
        let e = parse_config_str(r#"{"grid": {"eta": [0.5], "tau_sq": [1]}, "colour": 1}"#, &o).unwrap_err();
        assert!(e.to_string().contains("colour"));
        assert!(parse_config_str(r#"{"grid": {"eta": [0.5], "tau_sq": [1]}, "selector": "lasso"}"#, &o).is_err());
        assert!(parse_config_str(r#"{"grid": {"eta": [1.5], "tau_sq": [1]}}"#, &o).is_err());
        assert!(parse_config_str(r#"{"mode": "estimate"}"#, &o).is_err());
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { base_seed: Some(9), output: Some("x.csv".into()) };
        let c = parse_config_str(r#"{"grid": {"eta": [0.1, 0.9], "tau_sq": [1, 2]}, "base_seed": 3}"#, &o).unwrap();
        assert_eq!(c.base_seed, 9);
        assert_eq!(c.output.as_deref(), Some(Path::new("x.csv")));
        let cells: Vec<(f64, f64)> = c.scenarios().iter().map(|s| (s.tau_sq, s.eta)).collect();
        assert_eq!(cells, [(1.0, 0.1), (1.0, 0.9), (2.0, 0.1), (2.0, 0.9)]);
    }
}
