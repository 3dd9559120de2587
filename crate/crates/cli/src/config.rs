//! Run configuration: JSON file, then command-line flags, then defaults.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ks_core::radial::{DEFAULT_NODES, DEFAULT_R_MIN};
use ks_core::strong::Regime;
use serde::{Deserialize, Serialize};

pub const NODES_ENV: &str = "KS_DEFAULT_NODES";
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_ROOT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    K,
    Theta,
    P,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepTarget {
    Condition,
    Constants,
    Absorption,
    NegBranchF,
    WeakSolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    Absorption,
    Source,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Absorption => Regime::Absorption,
            RegimeArg::Source => Regime::Source,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub p: Option<f64>,
    pub theta: Option<f64>,
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: Option<f64>,
    pub n_nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub var: SweepVar,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub target: SweepTarget,
}

/// Everything a command may read. All fields are optional in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub lambda: Option<f64>,
    pub regime: Option<RegimeArg>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub m: Option<f64>,
    pub a_p: Option<f64>,
    pub end_to_end: Option<bool>,
    pub suite: Option<String>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(String),
    Env(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "cannot read config {}: {e}", p.display()),
            ConfigError::Parse(m) | ConfigError::Env(m) => f.write_str(m),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Parse(format!("config field `{path}`: {}", e.inner()))
        })
    }

    /// Fills unset fields from `other`; `self` wins.
    pub fn overlay(mut self, other: RunConfig) -> RunConfig {
        macro_rules! fill {
            ($($f:ident).+) => {
                if self.$($f).+.is_none() {
                    self.$($f).+ = other.$($f).+;
                }
            };
        }
        fill!(params.n);
        fill!(params.p);
        fill!(params.theta);
        fill!(params.k);
        fill!(grid.r_min);
        fill!(grid.n_nodes);
        fill!(lambda);
        fill!(regime);
        fill!(tol);
        fill!(max_iter);
        fill!(m);
        fill!(a_p);
        fill!(end_to_end);
        fill!(suite);
        fill!(sweep);
        fill!(output.format);
        fill!(output.path);
        fill!(output.csv);
        self
    }

    pub fn n(&self) -> u32 {
        self.params.n.unwrap_or(3)
    }

    pub fn p(&self) -> f64 {
        self.params.p.unwrap_or(2.0)
    }

    pub fn theta(&self) -> f64 {
        self.params.theta.unwrap_or(0.0)
    }

    pub fn k(&self) -> f64 {
        self.params.k.unwrap_or(1.0)
    }

    pub fn r_min(&self) -> f64 {
        self.grid.r_min.unwrap_or(DEFAULT_R_MIN)
    }

    pub fn nodes(&self) -> Result<usize, ConfigError> {
        if let Some(n) = self.grid.n_nodes {
            return Ok(n);
        }
        match std::env::var(NODES_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| ConfigError::Env(format!("{NODES_ENV} = {v:?} is not a node count"))),
            Err(_) => Ok(DEFAULT_NODES),
        }
    }

    pub fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(DEFAULT_MAX_ITER)
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_is_named() {
        let err = RunConfig::parse(r#"{"params": {"N": 3, "thta": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("params"), "{err}");
        assert!(err.to_string().contains("thta"), "{err}");
    }

    #[test]
    fn wrong_type_is_named() {
        let err = RunConfig::parse(r#"{"grid": {"n_nodes": "many"}}"#).unwrap_err();
        assert!(err.to_string().contains("grid.n_nodes"), "{err}");
    }

    #[test]
    fn flags_win_over_file() {
        let file = RunConfig::parse(r#"{"params": {"N": 2, "p": 1.5}, "tol": 1e-3}"#).unwrap();
        let flags = RunConfig { params: ParamsConfig { p: Some(3.0), ..Default::default() }, ..Default::default() };
        let merged = flags.overlay(file);
        assert_eq!((merged.n(), merged.p(), merged.tol(0.0)), (2, 3.0, 1e-3));
    }
}
