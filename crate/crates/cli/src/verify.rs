//! Pinned closed-form self-checks.

use std::f64::consts::PI;

use ks_core::constants::{
    barrier_scale, bootstrap_ledger, check_condition, compute_ap, singularity_coeff, tangency_map, CoeffRegime,
};
use ks_core::green::dirac_potential;
use ks_core::mass::gradient_mass;
use ks_core::radial::{DEFAULT_NODES, DEFAULT_R_MIN};
use ks_core::strong::{scalar_branch, Branch};
use ks_core::{make_grid, KsError, Params};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CLOSED_FORMS: &str = "closed-forms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    /// Relative tolerance when `expected != 0`, absolute otherwise.
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub passed: usize,
}

fn check(name: &str, value: f64, expected: f64, tol: f64) -> Check {
    let err = if expected == 0.0 { value.abs() } else { (value / expected - 1.0).abs() };
    Check { name: name.into(), value, expected, tol, pass: err <= tol }
}

fn params(n: u32, p: f64, theta: f64, k: f64) -> Result<Params, KsError> {
    Params::new(n, p, theta, k)
}

fn closed_forms() -> Result<Vec<Check>, KsError> {
    let g = make_grid(DEFAULT_R_MIN, DEFAULT_NODES)?;
    let mut out = vec![
        check("a_2, N = 3", compute_ap(&params(3, 2.0, 0.0, 1.0)?, &g)?, 1.0 / (12.0 * PI), 1e-4),
        check("a_2, N = 2", compute_ap(&params(2, 2.0, 0.0, 1.0)?, &g)?, 1.0 / (8.0 * PI), 1e-4),
    ];
    for n in [2, 3] {
        let pr = params(n, 2.0, 0.0, 1.0)?;
        let m = gradient_mass(&dirac_potential(&pr, &g), &pr)?.grad_mass;
        out.push(check(&format!("gradient mass of w0, N = {n}"), m, 1.0, 1e-6));
    }
    let (s, t) = barrier_scale(&params(3, 2.0, 1.0, 1.0)?)?;
    out.push(check("s_p, p = 2", s, 4.0, 1e-15));
    out.push(check("t_p, p = 2, theta = 1, k = 1", t, 2.0, 1e-15));
    let (s, t) = barrier_scale(&params(3, 3.0, 0.0, 1.0)?)?;
    out.push(check("s_p, p = 3", s, 27.0 / 8.0, 1e-15));
    out.push(check("t_p, p = 3, theta = 0, k = 1", t, 27.0 / 8.0, 1e-15));
    for p in [1.2_f64, 1.5, 2.0, 3.0, 5.0] {
        let s = (p / (p - 1.0)).powf(p);
        out.push(check(&format!("tangency f(s_p) = s_p, p = {p}"), tangency_map(p, s), s, 1e-12));
    }

    let cond = check_condition(&params(3, 2.0, 1.0, 1.0)?, 1.0 / (12.0 * PI))?;
    out.push(check("condition lhs, N = 3, p = 2, theta = 1, k = 1", cond.lhs_at_k, 0.5, 1e-15));
    out.push(check("condition rhs, a_p = 1/(12 pi)", cond.rhs, 3.0 * PI, 1e-14));
    let cond = check_condition(&params(3, 1.5, 0.0, 1.0)?, 0.1)?;
    let k4 = cond.admissible_set.first().map_or(f64::NAN, |iv| iv.lo);
    out.push(check("admissible threshold, theta = 0, p = 1.5, a_p = 0.1", k4, 0.0675, 1e-9));

    out.push(check(
        "c_p absorption, N = 3, p = 2",
        singularity_coeff(&params(3, 2.0, 0.0, 1.0)?, CoeffRegime::AbsorptionSubcritical)?,
        2.0,
        1e-15,
    ));
    out.push(check(
        "c_p source, N = 3, p = 5",
        singularity_coeff(&params(3, 5.0, 0.0, 1.0)?, CoeffRegime::SourceSupercritical)?,
        std::f64::consts::FRAC_1_SQRT_2,
        1e-15,
    ));
    out.push(check(
        "critical coefficient (printed), N = 4",
        singularity_coeff(&params(4, 2.0, 0.0, 1.0)?, CoeffRegime::SourceCritical)?,
        0.25,
        1e-15,
    ));

    let ledger = bootstrap_ledger(&params(3, 2.0, 0.0, 1.0)?)?;
    out.push(check("t_0, N = 3, p = 2", ledger.t_seq[0], 1.25, 1e-15));
    out.push(check("t_1, N = 3, p = 2", ledger.t_seq.get(1).copied().unwrap_or(f64::NAN), 3.75, 1e-15));
    out.push(check("m0, N = 3, p = 2", ledger.m0.map_or(f64::NAN, |m| m as f64), 1.0, 0.0));
    let ledger = bootstrap_ledger(&params(3, 2.5, 0.0, 1.0)?)?;
    out.push(check("mu_1, N = 3, p = 2.5", ledger.mu_seq[0], -0.5, 1e-15));
    out.push(check("mu_2, N = 3, p = 2.5", ledger.mu_seq.get(1).copied().unwrap_or(f64::NAN), 0.75, 1e-15));
    out.push(check("n2, N = 3, p = 2.5", ledger.n2 as f64, 2.0, 0.0));

    let p3 = params(3, 3.0, 0.0, 1.0)?;
    let bar = |pr: &Params, m: f64, b: Branch| -> Result<f64, KsError> {
        Ok(scalar_branch(pr, m, b)?.lambda_bar.unwrap_or(f64::NAN))
    };
    out.push(check("source branch, p = 3, m = 1", bar(&p3, 1.0, Branch::SupercriticalSource)?, 1.0, 1e-12));
    out.push(check("source branch, p = 3, m = 2", bar(&p3, 2.0, Branch::SupercriticalSource)?, 4.0, 1e-12));
    out.push(check(
        "negative branch, N = 3, p = 2, theta = -2, m = 1",
        bar(&params(3, 2.0, -2.0, 1.0)?, 1.0, Branch::NegativeThetaAbsorption)?,
        1.0,
        1e-10,
    ));
    Ok(out)
}

pub fn run_suite(suite: &str) -> Result<VerifyReport, CliError> {
    let checks = match suite {
        CLOSED_FORMS => closed_forms()?,
        other => return Err(CliError::Usage(format!("unknown suite {other:?}; available: {CLOSED_FORMS}"))),
    };
    let passed = checks.iter().filter(|c| c.pass).count();
    Ok(VerifyReport { suite: suite.into(), checks, passed })
}
