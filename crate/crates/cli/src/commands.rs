use std::io::Write;
use std::path::Path;

use ks_core::constants::{
    barrier_scale, bootstrap_ledger, check_condition, compute_ap, critical_coeff_asymptotic, singularity_coeff,
    CoeffRegime,
};
use ks_core::measure::{absorption_solve, negative_branch_solve, weak_singularity_solve};
use ks_core::strong::{
    end_to_end_strong, ode_residual_nodes, scalar_branch, strong_profile, Branch, ProfileReport, Regime,
};
use ks_core::{make_grid, Params, RadialFn, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::config::{Format, RegimeArg, RunConfig, DEFAULT_ROOT_TOL, DEFAULT_TOL};
use crate::report::{profile_csv, to_json, Envelope};
use crate::{sweep, verify, CliError, Command};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    /// `None` when `p >= p*`.
    pub a_p: Option<f64>,
    /// `None` for `N = 2` (no critical exponent).
    pub p_star: Option<f64>,
    #[serde(rename = "c_N")]
    pub c_n: f64,
    #[serde(rename = "sigma_N")]
    pub sigma_n: f64,
    pub theta_minus: f64,
    pub sobolev_exponent: Option<f64>,
    pub s_p: f64,
    /// `None` when `θ + k <= 0`.
    pub t_p: Option<f64>,
    pub c_p_absorption: Option<f64>,
    pub c_p_source: Option<f64>,
    pub c_critical_printed: Option<f64>,
    pub c_critical_asymptotic: Option<f64>,
}

pub(crate) fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn params(cfg: &RunConfig) -> Result<Params, CliError> {
    Ok(Params::new(cfg.n(), cfg.p(), cfg.theta(), cfg.k())?)
}

pub fn grid(cfg: &RunConfig) -> Result<RadialGrid, CliError> {
    Ok(make_grid(cfg.r_min(), cfg.nodes()?)?)
}

pub fn constants_report(pr: &Params, g: &RadialGrid) -> ConstantsReport {
    let p = pr.p();
    ConstantsReport {
        a_p: compute_ap(pr, g).ok(),
        p_star: finite(pr.p_star()),
        c_n: pr.c_n(),
        sigma_n: pr.sigma_n(),
        theta_minus: pr.theta_minus(),
        sobolev_exponent: finite(pr.sobolev_exponent()),
        s_p: (p / (p - 1.0)).powf(p),
        t_p: barrier_scale(pr).ok().map(|(_, t)| t),
        c_p_absorption: singularity_coeff(pr, CoeffRegime::AbsorptionSubcritical).ok(),
        c_p_source: singularity_coeff(pr, CoeffRegime::SourceSupercritical).ok(),
        c_critical_printed: singularity_coeff(pr, CoeffRegime::SourceCritical).ok(),
        c_critical_asymptotic: if singularity_coeff(pr, CoeffRegime::SourceCritical).is_ok() {
            critical_coeff_asymptotic(pr.dim()).ok()
        } else {
            None
        },
    }
}

/// What a command produced: the JSON record and, if it has one, a table.
pub struct Output {
    pub json: String,
    pub table: Option<String>,
}

fn envelope<T: Serialize>(command: &str, pr: Option<Params>, g: Option<&RadialGrid>, report: T) -> Result<String, CliError> {
    let env = Envelope { command: command.to_string(), params: pr, grid: g.map(|g| g.spec()), report };
    to_json(&env).map_err(|e| CliError::Io(format!("serializing report: {e}")))
}

fn table(u: &RadialFn, pr: &Params, kappa: f64) -> Result<String, CliError> {
    let residual = ode_residual_nodes(u, pr.dim_f64(), pr.p(), kappa);
    profile_csv(u, &residual).map_err(|e| CliError::Io(format!("writing CSV: {e}")))
}

fn regime_kappa(report: &ProfileReport) -> f64 {
    match report.regime {
        Regime::Absorption => 1.0,
        Regime::Source => -1.0,
    }
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("writing {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn emit(cfg: &RunConfig, format: Format, out: &Output) -> Result<(), CliError> {
    match format {
        Format::Json => {
            write_to(cfg.output.path.as_deref(), &out.json)?;
            if let Some(csv_path) = &cfg.output.csv {
                let t = out
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("this command has no profile table".into()))?;
                write_to(Some(csv_path), t)?;
            }
            Ok(())
        }
        Format::Csv => {
            let t = out
                .table
                .as_ref()
                .ok_or_else(|| CliError::Usage("this command has no tabular output; use --format json".into()))?;
            write_to(cfg.output.path.as_deref(), t)
        }
    }
}

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    let name = command.name();
    let out = match command {
        Command::Constants => {
            let pr = params(cfg)?;
            let g = grid(cfg)?;
            Output { json: envelope(name, Some(pr), Some(&g), constants_report(&pr, &g))?, table: None }
        }
        Command::Condition { .. } => {
            let pr = params(cfg)?;
            let g = grid(cfg)?;
            let a_p = match cfg.a_p {
                Some(a) => a,
                None => compute_ap(&pr, &g)?,
            };
            let rep = check_condition(&pr, a_p)?;
            Output { json: envelope(name, Some(pr), Some(&g), rep)?, table: None }
        }
        Command::WeakSolve => {
            let pr = params(cfg)?;
            let g = grid(cfg)?;
            let rep = weak_singularity_solve(&pr, &g, cfg.tol(DEFAULT_TOL), cfg.max_iter())?;
            let t = table(&rep.profile, &pr, -1.0 / rep.m_theta)?;
            Output { json: envelope(name, Some(pr), Some(&g), rep)?, table: Some(t) }
        }
        Command::AbsorptionSolve => {
            let pr = params(cfg)?;
            let g = grid(cfg)?;
            let lambda = cfg.lambda.ok_or_else(|| CliError::Usage("absorption-solve needs --lambda".into()))?;
            let rep = absorption_solve(&pr, lambda, &g, cfg.tol(DEFAULT_TOL))?;
            let t = table(&rep.profile, &pr, lambda)?;
            Output { json: envelope(name, Some(pr), Some(&g), rep)?, table: Some(t) }
        }
        Command::NegBranch => {
            let pr = params(cfg)?;
            let g = grid(cfg)?;
            let rep = negative_branch_solve(&pr, &g, cfg.tol(DEFAULT_ROOT_TOL))?;
            let t = table(&rep.solution.profile, &pr, rep.root)?;
            Output { json: envelope(name, Some(pr), Some(&g), rep)?, table: Some(t) }
        }
        Command::StrongProfile { .. } => {
            let pr = params(cfg)?;
            let g = grid(cfg)?;
            let regime: Regime = cfg.regime.unwrap_or(RegimeArg::Absorption).into();
            if cfg.end_to_end.unwrap_or(false) {
                let rep = end_to_end_strong(&pr, regime, &g, cfg.tol(DEFAULT_TOL))?;
                let t = table(&rep.profile.profile, &pr, regime_kappa(&rep.profile))?;
                Output { json: envelope(name, Some(pr), Some(&g), rep)?, table: Some(t) }
            } else {
                let rep = strong_profile(&pr, regime, &g, cfg.tol(DEFAULT_TOL))?;
                let t = table(&rep.profile, &pr, regime_kappa(&rep))?;
                Output { json: envelope(name, Some(pr), Some(&g), rep)?, table: Some(t) }
            }
        }
        Command::SuperBranch { .. } => {
            let pr = params(cfg)?;
            match cfg.m {
                Some(m) => {
                    let rep = scalar_branch(&pr, m, Branch::SupercriticalSource)?;
                    Output { json: envelope(name, Some(pr), None, rep)?, table: None }
                }
                None => {
                    let g = grid(cfg)?;
                    let rep = end_to_end_strong(&pr, Regime::Source, &g, cfg.tol(DEFAULT_TOL))?;
                    let t = table(&rep.profile.profile, &pr, -1.0)?;
                    Output { json: envelope(name, Some(pr), Some(&g), rep)?, table: Some(t) }
                }
            }
        }
        Command::Bootstrap => {
            let pr = params(cfg)?;
            Output { json: envelope(name, Some(pr), None, bootstrap_ledger(&pr)?)?, table: None }
        }
        Command::Verify { .. } => {
            let suite = cfg.suite.as_deref().unwrap_or(verify::CLOSED_FORMS);
            let rep = verify::run_suite(suite)?;
            let failed = rep.checks.iter().filter(|c| !c.pass).count();
            let out = Output { json: envelope(name, None, None, &rep)?, table: None };
            emit(cfg, cfg.format(), &out)?;
            if failed > 0 {
                return Err(CliError::Check(format!("{failed} of {} checks failed", rep.checks.len())));
            }
            return Ok(());
        }
        Command::Sweep { .. } => {
            let spec = cfg
                .sweep
                .clone()
                .ok_or_else(|| CliError::Usage("sweep needs --var, --lo, --hi, --count and --target".into()))?;
            let base = params(cfg)?;
            let g = grid(cfg)?;
            let rep = sweep::run(&spec, &base, cfg, &g)?;
            let t = rep.to_csv()?;
            Output { json: envelope(name, Some(base), Some(&g), rep)?, table: Some(t) }
        }
    };
    let format = match command {
        Command::Sweep { .. } => cfg.output.format.unwrap_or(Format::Csv),
        _ => cfg.format(),
    };
    emit(cfg, format, &out)
}
