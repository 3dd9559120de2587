//! Command-line driver: parses flags and config files, dispatches to
//! `ks-core`, and writes JSON/CSV reports.
//!
//! Exit status: 0 success, 1 unreadable config or I/O failure, 2 domain or
//! precondition error, 3 convergence failure or failed verification.

pub mod commands;
pub mod config;
pub mod report;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ks_core::KsError;
use serde::{Deserialize, Serialize};

use config::{ConfigError, Format, ParamsConfig, RegimeArg, RunConfig, SweepConfig, SweepTarget, SweepVar};

#[derive(Debug, Parser)]
#[command(name = "ks", version, about = "Isolated singular solutions of -M(u)Δu = u^p on the punctured unit ball")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "N", global = true)]
    pub n: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub rmin: Option<f64>,
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Also write the profile table `r,u,du_dr,residual` here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// a_p, p*, c_N, barrier scales and singularity coefficients.
    Constants,
    /// Admissibility of k for the weak-singularity construction.
    Condition {
        /// Use this a_p instead of computing it.
        #[arg(long, allow_hyphen_values = true)]
        a_p: Option<f64>,
    },
    /// Fixed-point construction of the solution with a Dirac source.
    WeakSolve,
    /// -Δu + λu^p = kδ₀.
    AbsorptionSolve,
    /// Negative-θ branch: root of F(λ) = 1/(-M(u_λ)) - λ.
    NegBranch,
    /// Strongly singular profile r^{-2/(p-1)}.
    StrongProfile {
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        /// Also solve the scalar branch and rescale into a Kirchhoff solution.
        #[arg(long)]
        end_to_end: bool,
    },
    /// Supercritical source branch; with --m only the scalar equation.
    SuperBranch {
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
    },
    /// Exponent ledgers of the regularity bootstrap.
    Bootstrap,
    /// Pinned self-checks.
    Verify {
        #[arg(long)]
        suite: Option<String>,
    },
    /// Tabulate one command over a range of one variable.
    Sweep {
        #[arg(long, value_enum)]
        var: Option<SweepVar>,
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum)]
        target: Option<SweepTarget>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Condition { .. } => "condition",
            Command::WeakSolve => "weak-solve",
            Command::AbsorptionSolve => "absorption-solve",
            Command::NegBranch => "neg-branch",
            Command::StrongProfile { .. } => "strong-profile",
            Command::SuperBranch { .. } => "super-branch",
            Command::Bootstrap => "bootstrap",
            Command::Verify { .. } => "verify",
            Command::Sweep { .. } => "sweep",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(KsError),
    Usage(String),
    /// The command ran but a check it performs failed; the report is still written.
    Check(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_convergence_failure() => 3,
            CliError::Core(_) => 2,
            CliError::Check(_) => 3,
        }
    }

    pub fn reason_code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.reason_code(),
            CliError::Check(_) => "check_failed",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Check(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<KsError> for CliError {
    fn from(e: KsError) -> Self {
        CliError::Core(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Machine-readable failure written to stderr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub reason: String,
    pub exit_code: i32,
    pub message: String,
    #[serde(rename = "F_values", skip_serializing_if = "Option::is_none", default)]
    pub f_values: Option<Vec<(f64, f64)>>,
}

impl ErrorReport {
    pub fn from_error(e: &CliError) -> Self {
        let f_values = match e {
            CliError::Core(KsError::BracketFailure { f_values, .. }) => Some(f_values.clone()),
            _ => None,
        };
        ErrorReport { reason: e.reason_code().into(), exit_code: e.exit_code(), message: e.to_string(), f_values }
    }
}

fn flag_config(common: &CommonArgs, command: &Command) -> RunConfig {
    let mut cfg = RunConfig {
        params: ParamsConfig { n: common.n, p: common.p, theta: common.theta, k: common.k },
        lambda: common.lambda,
        tol: common.tol,
        max_iter: common.max_iter,
        ..Default::default()
    };
    cfg.grid.r_min = common.rmin;
    cfg.grid.n_nodes = common.nodes;
    cfg.output.format = common.format;
    cfg.output.path = common.out.clone();
    cfg.output.csv = common.csv.clone();
    match command {
        Command::Condition { a_p } => cfg.a_p = *a_p,
        Command::StrongProfile { regime, end_to_end } => {
            cfg.regime = *regime;
            cfg.end_to_end = end_to_end.then_some(true);
        }
        Command::SuperBranch { m } => cfg.m = *m,
        Command::Verify { suite } => cfg.suite = suite.clone(),
        Command::Sweep { var, lo, hi, count, target } => {
            if let (Some(var), Some(lo), Some(hi), Some(count), Some(target)) = (var, lo, hi, count, target) {
                cfg.sweep = Some(SweepConfig { var: *var, lo: *lo, hi: *hi, count: *count, target: *target });
            }
        }
        _ => {}
    }
    cfg
}

/// Merged configuration for a parsed command line.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let flags = flag_config(&cli.common, &cli.command);
    let cfg = match &cli.common.config {
        Some(path) => flags.overlay(RunConfig::load(path)?),
        None => flags,
    };
    if let Command::Sweep { var, lo, hi, count, target } = &cli.command {
        let given = [var.is_some(), lo.is_some(), hi.is_some(), count.is_some(), target.is_some()];
        if given.iter().any(|g| *g) && !given.iter().all(|g| *g) {
            return Err(CliError::Usage("sweep needs all of --var, --lo, --hi, --count, --target".into()));
        }
    }
    Ok(cfg)
}

/// Runs the command and writes its outputs; returns the exit status.
pub fn run(cli: Cli) -> i32 {
    let result = resolve_config(&cli).and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let report = ErrorReport::from_error(&e);
            let text = serde_json::to_string(&report).unwrap_or_else(|_| format!("{{\"reason\":\"{}\"}}", report.reason));
            eprintln!("{text}");
            e.exit_code()
        }
    }
}
