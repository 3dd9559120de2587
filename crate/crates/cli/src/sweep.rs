//! One-variable sweeps. Rows are computed in parallel and kept in input
//! order; a failing row records its reason code instead of aborting.

use ks_core::constants::{check_condition, compute_ap};
use ks_core::measure::{absorption_solve, branch_function, weak_singularity_solve};
use ks_core::{KsError, Params, RadialGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::constants_report;
use crate::config::{RunConfig, SweepConfig, SweepTarget, SweepVar, DEFAULT_TOL, MAX_SWEEP_POINTS};
use crate::report::table_csv;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// One entry per column; `None` where the row failed or the value is undefined.
    pub values: Vec<Option<f64>>,
    pub status: String,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: SweepConfig,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let var = match self.spec.var {
            SweepVar::K => "k",
            SweepVar::Theta => "theta",
            SweepVar::P => "p",
            SweepVar::Lambda => "lambda",
        };
        let mut header = vec![var.to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("status".into());
        header.push("reason".into());
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.value.to_string()];
                cells.extend(r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
                cells.push(r.status.clone());
                cells.push(r.reason.clone().unwrap_or_default());
                cells
            })
            .collect();
        table_csv(&header, &rows).map_err(|e| CliError::Io(format!("writing CSV: {e}")))
    }
}

fn columns(target: SweepTarget) -> &'static [&'static str] {
    match target {
        SweepTarget::Condition => &["a_p", "lhs_at_k", "rhs", "admissible"],
        SweepTarget::Constants => &["a_p", "p_star", "s_p", "t_p"],
        SweepTarget::Absorption => &["m_theta", "singular_coeff_measured", "iterations"],
        SweepTarget::NegBranchF => &["F"],
        SweepTarget::WeakSolve => &["m_theta", "singular_coeff_measured", "iterations", "fixed_point_residual"],
    }
}

pub fn points(spec: &SweepConfig) -> Result<Vec<f64>, CliError> {
    if spec.count == 0 || spec.count > MAX_SWEEP_POINTS {
        return Err(CliError::Usage(format!("sweep count {} must lie in 1..={MAX_SWEEP_POINTS}", spec.count)));
    }
    if !(spec.lo.is_finite() && spec.hi.is_finite()) || spec.lo > spec.hi {
        return Err(CliError::Usage(format!("invalid sweep range [{}, {}]", spec.lo, spec.hi)));
    }
    if spec.count == 1 {
        return Ok(vec![spec.lo]);
    }
    let step = (spec.hi - spec.lo) / (spec.count - 1) as f64;
    Ok((0..spec.count).map(|i| if i + 1 == spec.count { spec.hi } else { spec.lo + step * i as f64 }).collect())
}

fn row_values(
    target: SweepTarget,
    pr: &Params,
    lambda: Option<f64>,
    cfg: &RunConfig,
    g: &RadialGrid,
) -> Result<Vec<Option<f64>>, KsError> {
    let need_lambda = || {
        lambda.ok_or_else(|| KsError::Domain("this target needs --lambda or a lambda sweep".into()))
    };
    Ok(match target {
        SweepTarget::Condition => {
            let a_p = match cfg.a_p {
                Some(a) => a,
                None => compute_ap(pr, g)?,
            };
            let rep = check_condition(pr, a_p)?;
            vec![Some(a_p), Some(rep.lhs_at_k), Some(rep.rhs), Some(if rep.admissible { 1.0 } else { 0.0 })]
        }
        SweepTarget::Constants => {
            let rep = constants_report(pr, g);
            vec![rep.a_p, rep.p_star, Some(rep.s_p), rep.t_p]
        }
        SweepTarget::Absorption => {
            let rep = absorption_solve(pr, need_lambda()?, g, cfg.tol(DEFAULT_TOL))?;
            vec![Some(rep.m_theta), Some(rep.singular_coeff_measured), Some(rep.iterations as f64)]
        }
        SweepTarget::NegBranchF => vec![Some(branch_function(pr, need_lambda()?, g)?)],
        SweepTarget::WeakSolve => {
            let rep = weak_singularity_solve(pr, g, cfg.tol(DEFAULT_TOL), cfg.max_iter())?;
            vec![
                Some(rep.m_theta),
                Some(rep.singular_coeff_measured),
                Some(rep.iterations as f64),
                Some(rep.fixed_point_residual),
            ]
        }
    })
}

pub fn run(spec: &SweepConfig, base: &Params, cfg: &RunConfig, g: &RadialGrid) -> Result<SweepReport, CliError> {
    let xs = points(spec)?;
    let cols = columns(spec.target);
    let rows = xs
        .par_iter()
        .map(|&x| {
            let point = match spec.var {
                SweepVar::K => base.with_k(x).map(|p| (p, cfg.lambda)),
                SweepVar::Theta => base.with_theta(x).map(|p| (p, cfg.lambda)),
                SweepVar::P => base.with_p(x).map(|p| (p, cfg.lambda)),
                SweepVar::Lambda => Ok((*base, Some(x))),
            };
            match point.and_then(|(pr, lambda)| row_values(spec.target, &pr, lambda, cfg, g)) {
                Ok(values) => SweepRow { value: x, values, status: "ok".into(), reason: None },
                Err(e) => SweepRow {
                    value: x,
                    values: vec![None; cols.len()],
                    status: "error".into(),
                    reason: Some(e.reason_code().into()),
                },
            }
        })
        .collect();
    Ok(SweepReport { spec: spec.clone(), columns: cols.iter().map(|c| c.to_string()).collect(), rows })
}
