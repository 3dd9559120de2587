//! Scalar constants and admissibility logic: `a_p`, the admissibility
//! inequality
//!
//! ```text
//! k^{p-1} / (θ + k) <= (1 / (a_p p)) ((p-1)/p)^{p-1},
//! ```
//!
//! the barrier scales `s_p`, `t_p`, the strong-singularity coefficients and
//! the integrability ledgers of the regularity bootstrap.

use serde::{Deserialize, Serialize};

use crate::error::{domain, KsError, Result};
use crate::green::{potential_pair, PotentialPair};
use crate::radial::{Params, RadialGrid};
use crate::roots::bisect_plain;

const K_TOL: f64 = 1e-10;
const P_EQ: f64 = 1e-12;
const LEDGER_CAP: usize = 10_000;

/// `sup w₁/w₀` on the grid, including the boundary limit `w₁'(1)/w₀'(1)`.
pub fn compute_ap(params: &Params, grid: &RadialGrid) -> Result<f64> {
    let pair = potential_pair(params, grid)?;
    Ok(ap_from_pair(&pair))
}

/// As [`compute_ap`] for an already computed pair.
pub fn ap_from_pair(pair: &PotentialPair) -> f64 {
    let w0 = pair.w0.values();
    let w1 = pair.w1.values();
    let n = w0.len();
    let interior = (0..n - 1).map(|i| w1[i] / w0[i]).fold(0.0, f64::max);
    interior.max(boundary_ratio(w0, w1))
}

/// Ratio of one-sided second-order differences at the last node. The step
/// and the chain-rule factor cancel.
fn boundary_ratio(w0: &[f64], w1: &[f64]) -> f64 {
    let n = w0.len();
    let d = |u: &[f64]| 3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3];
    d(w1) / d(w0)
}

/// Ratio `w₁/w₀` at every node; the last entry is the boundary limit.
pub fn ap_ratio_profile(pair: &PotentialPair) -> Vec<f64> {
    let w0 = pair.w0.values();
    let w1 = pair.w1.values();
    let n = w0.len();
    let mut out: Vec<f64> = (0..n - 1).map(|i| w1[i] / w0[i]).collect();
    out.push(boundary_ratio(w0, w1));
    out
}

/// Interval of admissible Dirac weights; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KInterval {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl KInterval {
    /// Membership with a slack of `tol` at both ends; the lower end is open
    /// when it is the natural bound `max(0, -θ)`.
    pub fn contains(&self, k: f64, tol: f64) -> bool {
        k >= self.lo - tol && self.hi.is_none_or(|h| k <= h + tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub a_p: f64,
    pub rhs: f64,
    pub lhs_at_k: f64,
    pub admissible: bool,
    pub admissible_set: Vec<KInterval>,
    pub k0: Option<f64>,
    pub case_label: String,
    /// Largest `a_p` for which the interval structure of the branch is the
    /// favourable one, derived from the extremum of `h`.
    pub a_threshold: Option<f64>,
    /// The threshold as printed for the `θ < 0`, `p > 2` branch.
    pub a_threshold_printed: Option<f64>,
}

/// `k^{p-1}/(θ+k)`, or `+∞` when `θ + k <= 0`.
pub fn condition_lhs(p: f64, theta: f64, k: f64) -> f64 {
    let den = theta + k;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        k.powf(p - 1.0) / den
    }
}

/// `(1/(a_p p)) ((p-1)/p)^{p-1}`.
pub fn condition_rhs(p: f64, a_p: f64) -> f64 {
    ((p - 1.0) / p).powf(p - 1.0) / (a_p * p)
}

/// Evaluates the admissibility inequality at `k` and describes the set of
/// admissible weights.
pub fn check_condition(params: &Params, a_p: f64) -> Result<ConditionReport> {
    let (p, theta, k) = (params.p(), params.theta(), params.k());
    if !(a_p.is_finite() && a_p > 0.0) {
        return domain(format!("a_p = {a_p} must be positive"));
    }
    if k <= params.theta_minus() {
        return domain(format!("k = {k} must exceed θ₋ = {}", params.theta_minus()));
    }
    if k <= 0.0 {
        return domain(format!("Dirac weight k = {k} must be positive"));
    }
    let rhs = condition_rhs(p, a_p);
    let lhs_at_k = condition_lhs(p, theta, k);
    let admissible = theta + k > 0.0 && lhs_at_k <= rhs;
    let p_is_two = (p - 2.0).abs() <= P_EQ;
    let k0 = (!p_is_two).then(|| (p - 1.0) * theta / (2.0 - p));
    let (admissible_set, case_label, a_threshold, a_threshold_printed) =
        admissible_intervals(p, theta, a_p, rhs, p_is_two);
    Ok(ConditionReport {
        a_p,
        rhs,
        lhs_at_k,
        admissible,
        admissible_set,
        k0,
        case_label,
        a_threshold,
        a_threshold_printed,
    })
}

type Classified = (Vec<KInterval>, String, Option<f64>, Option<f64>);

fn admissible_intervals(p: f64, theta: f64, a_p: f64, rhs: f64, p_is_two: bool) -> Classified {
    let g = |k: f64| condition_lhs(p, theta, k) - rhs;
    let k_lo = if theta < 0.0 { -theta } else { 0.0 };
    let root = |a: f64, b: f64| bisect_plain(g, a, b, K_TOL, 0.0, 400).map(|r| r.x);
    // First point to the right of `from` where `g` has the sign of `sign`.
    let expand = |from: f64, sign: f64| {
        let mut x = from.max(1.0);
        for _ in 0..2000 {
            x *= 2.0;
            if g(x).signum() == sign {
                return Some(x);
            }
        }
        None
    };
    let unbounded = |lo: f64| vec![KInterval { lo, hi: None }];

    if theta > 0.0 {
        if p_is_two {
            let label = "(i) theta > 0, p = 2".to_string();
            let a_star = Some(0.25);
            return if rhs >= 1.0 {
                (unbounded(0.0), label, a_star, None)
            } else {
                let k1 = theta / (4.0 * a_p - 1.0);
                (vec![KInterval { lo: 0.0, hi: Some(k1) }], label, a_star, None)
            };
        }
        if p < 2.0 {
            let label = "(i) theta > 0, 1 < p < 2".to_string();
            let k0 = (p - 1.0) * theta / (2.0 - p);
            let a_star = theta.powf(2.0 - p) * (2.0 - p).powf(p - 2.0) * p.powf(-p);
            if g(k0) <= 0.0 {
                return (unbounded(0.0), label, Some(a_star), None);
            }
            let k1 = root(0.0, k0).unwrap_or(0.0);
            let k2 = expand(k0, -1.0).and_then(|b| root(k0, b)).unwrap_or(f64::INFINITY);
            return (
                vec![KInterval { lo: 0.0, hi: Some(k1) }, KInterval { lo: k2, hi: None }],
                label,
                Some(a_star),
                None,
            );
        }
        let label = "(i) theta > 0, p > 2".to_string();
        let k3 = expand(0.0, 1.0).and_then(|b| root(0.0, b)).unwrap_or(0.0);
        return (vec![KInterval { lo: 0.0, hi: Some(k3) }], label, None, None);
    }

    if theta == 0.0 {
        if p_is_two {
            let label = "(ii) theta = 0, p = 2".to_string();
            let set = if rhs >= 1.0 { unbounded(0.0) } else { Vec::new() };
            return (set, label, Some(0.25), None);
        }
        if p < 2.0 {
            let label = "(ii) theta = 0, 1 < p < 2".to_string();
            let k4 = rhs.powf(-1.0 / (2.0 - p));
            return (unbounded(k4), label, None, None);
        }
        let label = "(ii) theta = 0, p > 2".to_string();
        let k = rhs.powf(1.0 / (p - 2.0));
        return (vec![KInterval { lo: 0.0, hi: Some(k) }], label, None, None);
    }

    // θ < 0: weights live on (-θ, ∞), where `h` starts at +∞.
    if p_is_two {
        let label = "(iii) theta < 0, p = 2".to_string();
        let set = if a_p < 0.25 {
            unbounded(-theta / (1.0 - 4.0 * a_p))
        } else {
            Vec::new()
        };
        return (set, label, Some(0.25), None);
    }
    if p < 2.0 {
        let label = "(iii) theta < 0, 1 < p < 2".to_string();
        let k4 = expand(k_lo, -1.0).and_then(|b| root(k_lo, b)).unwrap_or(f64::INFINITY);
        return (unbounded(k4), label, None, None);
    }
    let label = "(iii) theta < 0, 2 < p (printed threshold: unverified formula)".to_string();
    let k0 = (p - 1.0) * theta / (2.0 - p);
    let a_derived = (-theta).powf(2.0 - p) * (p - 2.0).powf(p - 2.0) * p.powf(-p);
    let a_printed = (-theta).powf(2.0 - p) * p.powf(-p) * (p - 1.0) * (p - 2.0).powf(p - 3.0);
    if g(k0) > 0.0 {
        return (Vec::new(), label, Some(a_derived), Some(a_printed));
    }
    let k5 = root(k_lo, k0).unwrap_or(k0);
    let k6 = expand(k0, 1.0).and_then(|b| root(k0, b)).unwrap_or(f64::INFINITY);
    (
        vec![KInterval { lo: k5, hi: Some(k6) }],
        label,
        Some(a_derived),
        Some(a_printed),
    )
}

/// `f(s) = ((1/p)((p-1)/p)^{p-1} s + 1)^p`, whose tangency with the diagonal
/// fixes the barrier scale.
pub fn tangency_map(p: f64, s: f64) -> f64 {
    (((p - 1.0) / p).powf(p - 1.0) * s / p + 1.0).powf(p)
}

/// `(s_p, t_p)` with `s_p = (p/(p-1))^p` and `t_p = s_p/(θ + k)`.
pub fn barrier_scale(params: &Params) -> Result<(f64, f64)> {
    let den = params.theta() + params.k();
    if den <= 0.0 {
        return domain(format!("θ + k = {den} must be positive"));
    }
    let p = params.p();
    let s_p = (p / (p - 1.0)).powf(p);
    Ok((s_p, s_p / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffRegime {
    AbsorptionSubcritical,
    SourceSupercritical,
    SourceCritical,
}

/// Strong-singularity coefficient of the regime.
///
/// For `SourceCritical` this is the printed value `((N-2)/4)^{N-2}`; see
/// [`critical_coeff_asymptotic`] for the coefficient of the log-corrected
/// asymptotics of the radial equation.
pub fn singularity_coeff(params: &Params, regime: CoeffRegime) -> Result<f64> {
    let n = params.dim_f64();
    let p = params.p();
    let alpha = 2.0 / (p - 1.0);
    match regime {
        CoeffRegime::AbsorptionSubcritical => {
            let b = alpha * (alpha + 2.0 - n);
            if b <= 0.0 {
                return Err(KsError::RegimeMismatch(format!(
                    "2/(p-1) + 2 - N = {} is not positive",
                    alpha + 2.0 - n
                )));
            }
            Ok(b.powf(1.0 / (p - 1.0)))
        }
        CoeffRegime::SourceSupercritical => {
            let b = alpha * (n - 2.0 - alpha);
            if b <= 0.0 {
                return Err(KsError::RegimeMismatch(format!(
                    "N - 2 - 2/(p-1) = {} is not positive",
                    n - 2.0 - alpha
                )));
            }
            Ok(b.powf(1.0 / (p - 1.0)))
        }
        CoeffRegime::SourceCritical => {
            if params.dim() < 3 || (p - params.p_star()).abs() > P_EQ {
                return Err(KsError::RegimeMismatch(format!(
                    "critical regime needs p = p* = {}, got {p}",
                    params.p_star()
                )));
            }
            Ok(((n - 2.0) / 4.0).powf(n - 2.0))
        }
    }
}

/// `lim u(r) r^{N-2} |ln r|^{(N-2)/2}` for radial solutions of `-Δu = u^{N/(N-2)}`
/// with a non-removable singularity: `((N-2)/√2)^{N-2}`.
pub fn critical_coeff_asymptotic(n: u32) -> Result<f64> {
    if n < 3 {
        return domain(format!("critical exponent needs N >= 3, got {n}"));
    }
    let nf = n as f64;
    Ok(((nf - 2.0) / std::f64::consts::SQRT_2).powf(nf - 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapLedger {
    pub t_seq: Vec<f64>,
    pub mu_seq: Vec<f64>,
    /// First index with `t_m > Np/2`; `None` if the recursion left its
    /// range of validity (`t >= N/2`) first.
    pub m0: Option<usize>,
    /// First index `n` with `μ_n > 0`.
    pub n2: usize,
}

pub fn bootstrap_ledger(params: &Params) -> Result<BootstrapLedger> {
    if params.dim() < 3 {
        return domain("bootstrap ledger needs N >= 3");
    }
    params.require_subcritical()?;
    let n = params.dim_f64();
    let p = params.p();

    let target = n * p / 2.0;
    let mut t_seq = vec![0.5 * (1.0 + n / (p * (n - 2.0)))];
    let mut m0 = None;
    while t_seq.len() < LEDGER_CAP {
        let prev = *t_seq.last().unwrap();
        if prev > target {
            m0 = Some(t_seq.len() - 1);
            break;
        }
        if prev >= n / 2.0 {
            break;
        }
        t_seq.push(n * prev / (p * (n - 2.0 * prev)));
    }

    // μ_n is indexed from 1; μ_seq[0] = μ₁.
    let mut mu_seq = vec![2.0 + (2.0 - n) * p];
    while *mu_seq.last().unwrap() <= 0.0 && mu_seq.len() < LEDGER_CAP {
        let prev = *mu_seq.last().unwrap();
        mu_seq.push(p * prev + 2.0);
    }
    let n2 = mu_seq.len();
    Ok(BootstrapLedger { t_seq, mu_seq, m0, n2 })
}
