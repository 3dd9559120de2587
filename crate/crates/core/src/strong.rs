//! Strongly singular profiles `u ~ c_p r^{-2/(p-1)}` and the scalar branch
//! equations that turn them into Kirchhoff solutions.
//!
//! Profiles are computed in Emden–Fowler variables: with `α = 2/(p-1)`,
//! `t = ln r` and `w = r^α u`, the radial equation `Δu = ε u^p` becomes
//!
//! ```text
//! w'' + β w' - A w = ε w^p,   β = N - 2 - 2α,   A = α (N - 2 - α),
//! ```
//!
//! (`ε = +1` absorption, `ε = -1` source). The singular solution is the
//! equilibrium `w ≡ c_p`; a profile vanishing at `r = 1` leaves it along the
//! slowest mode `e^{st}` of the linearisation.

use serde::{Deserialize, Serialize};

use crate::constants::{critical_coeff_asymptotic, singularity_coeff, CoeffRegime};
use crate::error::{domain, KsError, Result};
use crate::mass::gradient_mass;
use crate::radial::{linear_fit, quad, Params, RadialFn, RadialGrid, SingularTag};
use crate::roots::bisect_plain;

const STEP_TOL: f64 = 1e-10;
const P_EQ: f64 = 1e-12;
const SEED: f64 = 1e-10;
const T_MAX: f64 = 2000.0;
/// `w'(0)` of the log-corrected profile at `p = p*` (one member of a family).
const CRITICAL_SLOPE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `-Δu + u^p = 0`.
    Absorption,
    /// `-Δu = u^p`.
    Source,
}

impl Regime {
    /// `ε` in `Δu = ε u^p`.
    fn sign(self) -> f64 {
        match self {
            Regime::Absorption => 1.0,
            Regime::Source => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub regime: Regime,
    pub profile: RadialFn,
    /// `∫|∇u| dx`; `None` when the integral diverges.
    pub grad_mass: Option<f64>,
    pub exponent_fit: f64,
    pub coeff_fit: f64,
    pub ode_residual: f64,
    pub expected_exponent: f64,
    /// `c_p`, or `((N-2)/√2)^{N-2}` for the log-corrected profile at `p = p*`.
    pub expected_coeff: f64,
    /// `((N-2)/4)^{N-2}` at `p = p*`, reported next to the fit.
    pub printed_critical_coeff: Option<f64>,
    pub critical: bool,
    /// Slowest mode `s = re + i·im` of the linearisation about `c_p`.
    pub indicial_exponent: [f64; 2],
    /// `w ≈ c_p + Re(η e^{s t})` near the origin.
    pub eta: [f64; 2],
    /// `|w(r_min) - c_p| / c_p`.
    pub expansion_defect: f64,
    /// `|w(1)| / c_p` before the boundary value is set to zero.
    pub shooting_defect: f64,
    /// `(ρ, σ_N ∫_ρ^1 u^p r^{N-1} dr)` for shrinking `ρ`; growth without bound
    /// is the numerical trace of `u^p ∉ L¹`.
    pub truncated_source_mass: Vec<[f64; 2]>,
    pub note: String,
}

type State = [f64; 2];

fn rk4(f: &impl Fn(f64, State) -> State, t: f64, y: State, h: f64) -> State {
    let add = |y: State, k: State, c: f64| [y[0] + c * k[0], y[1] + c * k[1]];
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = f(t + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// One accepted step of RK4 with step doubling; returns `(y, h_used, h_next)`.
fn controlled_step(f: &impl Fn(f64, State) -> State, t: f64, y: State, mut h: f64) -> Result<(State, f64, f64)> {
    for _ in 0..200 {
        let full = rk4(f, t, y, h);
        let half = rk4(f, t, y, 0.5 * h);
        let two = rk4(f, t + 0.5 * h, half, 0.5 * h);
        let err = ((two[0] - full[0]).abs() + (two[1] - full[1]).abs()) / 15.0;
        let scale = two[0].abs() + two[1].abs() + f64::MIN_POSITIVE;
        let allowed = STEP_TOL * h.abs() * scale;
        if !(err.is_finite() && two[0].is_finite()) {
            h *= 0.25;
            continue;
        }
        if err <= allowed {
            let grow = if err == 0.0 { 4.0 } else { (0.9 * (allowed / err).powf(0.2)).min(4.0) };
            let y_new = [two[0] + (two[0] - full[0]) / 15.0, two[1] + (two[1] - full[1]) / 15.0];
            return Ok((y_new, h, h * grow.max(1.0)));
        }
        h *= (0.9 * (allowed / err).powf(0.2)).max(0.1);
    }
    Err(KsError::ShootingFailure("step size underflow".into()))
}

/// Integrates from `t0` to `t1` (either direction).
fn integrate(f: &impl Fn(f64, State) -> State, t0: f64, t1: f64, mut y: State) -> Result<State> {
    let mut t = t0;
    let dir = (t1 - t0).signum();
    let mut h = t1 - t0;
    while (t1 - t) * dir > 0.0 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let (y_new, used, next) = controlled_step(f, t, y, h)?;
        t = if (t + used - t1).abs() <= 1e-15 * t1.abs().max(1.0) { t1 } else { t + used };
        y = y_new;
        h = next;
    }
    Ok(y)
}

/// Values of `y` at every node of `ts`, starting from `y0` at `ts[0]`.
fn integrate_on(f: &impl Fn(f64, State) -> State, ts: &[f64], y0: State) -> Result<Vec<State>> {
    let mut out = Vec::with_capacity(ts.len());
    out.push(y0);
    for w in ts.windows(2) {
        let y = integrate(f, w[0], w[1], *out.last().unwrap())?;
        out.push(y);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn mul(self, o: Complex) -> Complex {
        Complex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    fn exp(self) -> Complex {
        let m = self.re.exp();
        Complex { re: m * self.im.cos(), im: m * self.im.sin() }
    }

    fn scale(self, c: f64) -> Complex {
        Complex { re: c * self.re, im: c * self.im }
    }
}

struct PowerModel {
    p: f64,
    beta: f64,
    a: f64,
    eps: f64,
    c: f64,
    s: Complex,
}

impl PowerModel {
    /// `(z, z')` with `z = w - c` and `z'' = -β z' + A z + ε((c+z)^p - c^p)`.
    fn rhs(&self) -> impl Fn(f64, State) -> State + '_ {
        move |_, y| {
            let x = (y[0] / self.c).max(-1.0);
            let nl = self.c.powf(self.p) * (self.p * x.ln_1p()).exp_m1();
            [y[1], -self.beta * y[1] + self.a * y[0] + self.eps * nl]
        }
    }

    /// Linear-mode data `Re(η e^{st})`, `Re(η s e^{st})`.
    fn mode(&self, eta: Complex, t: f64) -> State {
        let e = eta.mul(self.s.scale(t).exp());
        [e.re, e.mul(self.s).re]
    }
}

fn check_regime(params: &Params, regime: Regime) -> Result<bool> {
    let n = params.dim_f64();
    let p = params.p();
    match regime {
        Regime::Absorption => {
            params.require_subcritical().map_err(|_| {
                KsError::Domain(format!("absorption profile needs 1 < p < p* = {}", params.p_star()))
            })?;
            Ok(false)
        }
        Regime::Source => {
            if params.dim() < 3 {
                return domain("source profile needs N >= 3");
            }
            let p_star = params.p_star();
            let sob = (n + 2.0) / (n - 2.0);
            if p < p_star - P_EQ || p >= sob - P_EQ {
                return domain(format!("source profile needs p* = {p_star} <= p < (N+2)/(N-2) = {sob}, got {p}"));
            }
            Ok((p - p_star).abs() <= P_EQ)
        }
    }
}

/// Computes a strongly singular profile vanishing at `r = 1`.
pub fn strong_profile(params: &Params, regime: Regime, grid: &RadialGrid, tol: f64) -> Result<ProfileReport> {
    let critical = check_regime(params, regime)?;
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    if critical {
        return critical_profile(params, grid, tol);
    }
    let n = params.dim_f64();
    let p = params.p();
    let alpha = 2.0 / (p - 1.0);
    let c = match regime {
        Regime::Absorption => singularity_coeff(params, CoeffRegime::AbsorptionSubcritical)?,
        Regime::Source => singularity_coeff(params, CoeffRegime::SourceSupercritical)?,
    };
    let eps = regime.sign();
    let beta = n - 2.0 - 2.0 * alpha;
    let a = alpha * (n - 2.0 - alpha);
    let kappa = a + eps * p * c.powf(p - 1.0);
    let disc = beta * beta + 4.0 * kappa;
    let s = if disc >= 0.0 {
        let r1 = 0.5 * (-beta - disc.sqrt());
        let r2 = 0.5 * (-beta + disc.sqrt());
        let re = if r1 > 0.0 { r1 } else { r2 };
        Complex { re, im: 0.0 }
    } else {
        Complex { re: -0.5 * beta, im: 0.5 * (-disc).sqrt() }
    };
    if !(s.re > 0.0) {
        return Err(KsError::ShootingFailure(format!(
            "no mode decays toward the origin (indicial exponent {} + {}i)",
            s.re, s.im
        )));
    }
    let model = PowerModel { p, beta, a, eps, c, s };
    let f = model.rhs();

    // Reference trajectory from z = ±SEED at t = 0 to its first zero T*.
    let mut found = None;
    for sign in [-1.0, 1.0] {
        let eta = Complex { re: sign * SEED * c, im: 0.0 };
        if let Some(t_star) = first_zero(&f, model.mode(eta, 0.0), c)? {
            found = Some((eta, t_star));
            break;
        }
    }
    let Some((eta_ref, t_star)) = found else {
        return Err(KsError::ShootingFailure("no trajectory leaving c_p reaches zero".into()));
    };

    // w(t) = W(t + T* + τ): η(τ) = η_ref e^{s (T* + τ)}; τ tuned by secant.
    let ts = grid.log_nodes();
    let shoot = |tau: f64| -> Result<(Vec<State>, Complex)> {
        let eta = eta_ref.mul(model.s.scale(t_star + tau).exp());
        Ok((integrate_on(&f, ts, model.mode(eta, ts[0]))?, eta))
    };
    let end = |ys: &[State]| c + ys.last().unwrap()[0];
    let (mut tau0, mut tau1) = (0.0, 1e-6);
    let (mut ys, mut eta) = shoot(tau0)?;
    let mut f0 = end(&ys);
    for _ in 0..30 {
        if f0.abs() <= 1e-13 * c {
            break;
        }
        let (ys1, eta1) = shoot(tau1)?;
        let f1 = end(&ys1);
        (ys, eta) = (ys1, eta1);
        if f1.abs() <= 1e-13 * c || f1 == f0 {
            f0 = f1;
            break;
        }
        let next = tau1 - f1 * (tau1 - tau0) / (f1 - f0);
        (tau0, f0, tau1) = (tau1, f1, next);
    }
    let shooting_defect = f0.abs() / c;
    let ws: Vec<f64> = ys.iter().map(|y| c + y[0]).collect();
    if ws[..ws.len() - 1].iter().any(|w| *w <= 0.0) {
        return Err(KsError::ShootingFailure("profile changes sign inside the ball".into()));
    }
    let expansion_defect = ys[0][0].abs() / c;

    let mut values: Vec<f64> = ws.iter().zip(ts).map(|(w, t)| w * (-alpha * t).exp()).collect();
    *values.last_mut().unwrap() = 0.0;
    let profile = RadialFn::new(grid.clone(), values, SingularTag::Power { alpha: -alpha }, c)?;
    let (exponent_fit, _) = profile.log_log_fit(10.0 * grid.r_min());
    let coeff_fit = fixed_exponent_coeff(&profile, alpha, 10.0 * grid.r_min());
    let ode_residual = ode_residual(&profile, n, p, eps);
    if ode_residual > tol {
        return Err(KsError::ShootingFailure(format!("ODE residual {ode_residual:e} exceeds {tol:e}")));
    }
    Ok(ProfileReport {
        regime,
        grad_mass: finite_mass(&profile, params)?,
        truncated_source_mass: truncated_source_mass(&profile, params),
        profile,
        exponent_fit,
        coeff_fit,
        ode_residual,
        expected_exponent: -alpha,
        expected_coeff: c,
        printed_critical_coeff: None,
        critical: false,
        indicial_exponent: [model.s.re, model.s.im],
        eta: [eta.re, eta.im],
        expansion_defect,
        shooting_defect,
        note: note(regime),
    })
}

fn note(regime: Regime) -> String {
    match regime {
        Regime::Absorption => "unique profile with u(1) = 0".into(),
        Regime::Source => "one member of the family of singular profiles; multiplicity not reproduced".into(),
    }
}

/// First `t > 0` where `c + z` vanishes, or `None` if the trajectory
/// escapes upward or stalls.
fn first_zero(f: &impl Fn(f64, State) -> State, mut y: State, c: f64) -> Result<Option<f64>> {
    let mut t = 0.0;
    let mut h: f64 = 0.01;
    while t < T_MAX {
        let (y_new, used, next) = controlled_step(f, t, y, h)?;
        if c + y_new[0] <= 0.0 {
            let g = |frac: f64| {
                let half = rk4(f, t, y, 0.5 * frac * used);
                c + rk4(f, t + 0.5 * frac * used, half, 0.5 * frac * used)[0]
            };
            let root = bisect_plain(g, 0.0, 1.0, 1e-15, 0.0, 200).map(|r| r.x).unwrap_or(1.0);
            return Ok(Some(t + root * used));
        }
        if y_new[0] > 1e6 * c {
            return Ok(None);
        }
        t += used;
        y = y_new;
        h = next.min(0.5);
    }
    Ok(None)
}

/// Log-corrected profile at `p = p* = N/(N-2)`: with `w = r^{N-2} u`,
/// `w'' - (N-2) w' = -w^p`, integrated from `r = 1` toward the origin,
/// where the fast mode decays and the slow manifold attracts.
fn critical_profile(params: &Params, grid: &RadialGrid, tol: f64) -> Result<ProfileReport> {
    let n = params.dim_f64();
    let p = params.p();
    let alpha = n - 2.0;
    let f = |_: f64, y: State| [y[1], alpha * y[1] - y[0].max(0.0).powf(p)];
    let ts: Vec<f64> = grid.log_nodes().iter().rev().copied().collect();
    let ys = integrate_on(&f, &ts, [0.0, -CRITICAL_SLOPE])?;
    let ws: Vec<f64> = ys.iter().rev().map(|y| y[0]).collect();
    if ws[..ws.len() - 1].iter().any(|w| *w <= 0.0) {
        return Err(KsError::ShootingFailure("profile changes sign inside the ball".into()));
    }
    let c_asym = critical_coeff_asymptotic(params.dim())?;
    let log_power = -0.5 * (n - 2.0);
    let nodes = grid.log_nodes();
    let values: Vec<f64> = ws.iter().zip(nodes).map(|(w, t)| w * (-alpha * t).exp()).collect();
    let profile = RadialFn::new(
        grid.clone(),
        values,
        SingularTag::PowerLog { alpha: -alpha, log_power },
        c_asym,
    )?;
    let (exponent_fit, _) = profile.log_log_fit(10.0 * grid.r_min());
    // w^{-(p-1)} ≈ κ |ln r| + C near the origin; the coefficient is κ^{-1/(p-1)}.
    let t_cut = nodes[0] + std::f64::consts::LN_10;
    let (xs, ys): (Vec<f64>, Vec<f64>) = nodes
        .iter()
        .zip(&ws)
        .take_while(|(t, _)| **t <= t_cut)
        .map(|(t, w)| (-t, w.powf(1.0 - p)))
        .unzip();
    let kappa = linear_fit(&xs, &ys).0;
    let coeff_fit = kappa.powf(-1.0 / (p - 1.0));
    let ode_residual = ode_residual(&profile, n, p, -1.0);
    if ode_residual > tol {
        return Err(KsError::ShootingFailure(format!("ODE residual {ode_residual:e} exceeds {tol:e}")));
    }
    Ok(ProfileReport {
        regime: Regime::Source,
        grad_mass: finite_mass(&profile, params)?,
        truncated_source_mass: truncated_source_mass(&profile, params),
        profile,
        exponent_fit,
        coeff_fit,
        ode_residual,
        expected_exponent: -alpha,
        expected_coeff: c_asym,
        printed_critical_coeff: Some(singularity_coeff(params, CoeffRegime::SourceCritical)?),
        critical: true,
        indicial_exponent: [0.0, 0.0],
        eta: [0.0, 0.0],
        expansion_defect: (coeff_fit - c_asym).abs() / c_asym,
        shooting_defect: 0.0,
        note: format!("log-corrected profile with w'(1) = -{CRITICAL_SLOPE}; one member of a family"),
    })
}

/// Least-squares `ln C` in `ln u = ln C - α ln r` over `r ≤ r_cut`.
fn fixed_exponent_coeff(u: &RadialFn, alpha: f64, r_cut: f64) -> f64 {
    let (sum, count) = u
        .grid()
        .nodes()
        .iter()
        .zip(u.values())
        .take_while(|(r, _)| **r <= r_cut)
        .filter(|(_, v)| **v > 0.0)
        .fold((0.0, 0usize), |(s, c), (r, v)| (s + v.ln() + alpha * r.ln(), c + 1));
    (sum / count.max(1) as f64).exp()
}

fn truncated_source_mass(u: &RadialFn, params: &Params) -> Vec<[f64; 2]> {
    let n = params.dim_f64();
    let grid = u.grid();
    let h = grid.log_step();
    let ts = grid.log_nodes();
    let integrand: Vec<f64> = u
        .values()
        .iter()
        .zip(ts)
        .map(|(v, t)| v.max(0.0).powf(params.p()) * (n * t).exp())
        .collect();
    let from_right = quad::cumulative_from_right(&integrand, h);
    let mut out = Vec::new();
    let mut i = 0;
    while i < ts.len() {
        out.push([ts[i].exp(), params.sigma_n() * from_right[i]]);
        // One row per decade.
        i += (std::f64::consts::LN_10 / h).round().max(1.0) as usize;
    }
    out
}

fn finite_mass(profile: &RadialFn, params: &Params) -> Result<Option<f64>> {
    match gradient_mass(profile, params) {
        Ok(m) => Ok(Some(m.grad_mass)),
        Err(KsError::Divergence(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Max over interior nodes of `|Δu - κ u^p|` relative to
/// `|u''| + |(N-1) u'/r| + |κ| u^p` at the same node.
pub fn ode_residual(u: &RadialFn, n: f64, p: f64, kappa: f64) -> f64 {
    ode_residual_nodes(u, n, p, kappa)
        .into_iter()
        .filter(|r| !r.is_nan())
        .fold(0.0, f64::max)
}

/// Nodewise version of [`ode_residual`]; `NaN` at the two nodes next to
/// each end, where the stencils are one-sided.
pub fn ode_residual_nodes(u: &RadialFn, n: f64, p: f64, kappa: f64) -> Vec<f64> {
    let h = u.grid().log_step();
    let d1 = quad::derivative(u.values(), h);
    let d2 = quad::second_derivative(u.values(), h);
    let ts = u.grid().log_nodes();
    let v = u.values();
    let len = v.len();
    (0..len)
        .map(|i| {
            if i < 2 || i + 2 >= len {
                return f64::NAN;
            }
            let e = (-2.0 * ts[i]).exp();
            let urr = e * (d2[i] - d1[i]);
            let ur = e * (n - 1.0) * d1[i];
            let src = kappa * v[i].max(0.0).powf(p);
            (urr + ur - src).abs() / (urr.abs() + ur.abs() + src.abs()).max(f64::MIN_POSITIVE)
        })
        .collect()
}

/// Residual of `λ^{-1/(p-1)} v` in the `λ`-equation `Δu = ελ u^p`.
pub fn scaled_profile_residual(report: &ProfileReport, params: &Params, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain(format!("λ = {lambda} must be positive"));
    }
    let p = params.p();
    let v = report.profile.scaled(lambda.powf(-1.0 / (p - 1.0)));
    Ok(ode_residual(&v, params.dim_f64(), p, report.regime.sign() * lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    NegativeThetaAbsorption,
    SupercriticalSource,
}

/// Open interval `(lo, hi)`; `hi = None` is `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && self.hi.is_none_or(|h| x < h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarBranchReport {
    pub branch: Branch,
    /// Negative branch: `λ̄` with `u = λ̄^{-1/(p-1)} v` and `M_θ(u) = -1/λ̄`.
    /// Source branch: `λ̄ = M_θ(u)` with `u = λ̄^{1/(p-1)} v`.
    pub lambda_bar: Option<f64>,
    pub m: f64,
    pub case_label: String,
    pub lambda_window: Window,
    pub m_theta: Option<f64>,
    /// Factor `s` with `u = s v`.
    pub scale: Option<f64>,
    pub family_flag: bool,
    /// `1/(μ^{-1/(p-1)} m + θ) ∓ μ` at the root, `μ = λ̄` (negative) or `1/λ̄` (source).
    pub branch_defect: Option<f64>,
}

/// Solves the scalar equation that rescales a profile of gradient mass `m`
/// into a Kirchhoff solution.
pub fn scalar_branch(params: &Params, m: f64, branch: Branch) -> Result<ScalarBranchReport> {
    if !(m > 0.0 && m.is_finite()) {
        return domain(format!("gradient mass m = {m} must be positive and finite"));
    }
    match branch {
        Branch::NegativeThetaAbsorption => negative_scalar(params, m),
        Branch::SupercriticalSource => source_scalar(params, m),
    }
}

fn negative_scalar(params: &Params, m: f64) -> Result<ScalarBranchReport> {
    let (p, theta) = (params.p(), params.theta());
    if !(theta < 0.0) || !params.is_subcritical() {
        return Err(KsError::Unclassifiable(format!(
            "negative branch needs θ < 0 and 1 < p < p*, got θ = {theta}, p = {p}"
        )));
    }
    let q = 1.0 / (p - 1.0);
    let lambda_0 = (m / -theta).powf(p - 1.0);
    let big_f = |l: f64| 1.0 / (l.powf(-q) * m + theta) + l;
    let mut hi = 2.0 * lambda_0;
    while big_f(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(KsError::BracketFailure { lo: lambda_0, hi, f_values: Vec::new() });
        }
    }
    let lo = lambda_0 * (1.0 + 1e-14);
    let root = bisect_plain(big_f, lo, hi, 1e-16 * hi, 0.0, 400)
        .ok_or_else(|| KsError::BracketFailure { lo, hi, f_values: vec![(lo, big_f(lo)), (hi, big_f(hi))] })?;
    let l = root.x;
    Ok(ScalarBranchReport {
        branch: Branch::NegativeThetaAbsorption,
        lambda_bar: Some(l),
        m,
        case_label: "negative theta, subcritical absorption".into(),
        lambda_window: Window { lo: lambda_0, hi: None },
        m_theta: Some(-1.0 / l),
        scale: Some(l.powf(-q)),
        family_flag: false,
        branch_defect: Some(big_f(l)),
    })
}

fn source_scalar(params: &Params, m: f64) -> Result<ScalarBranchReport> {
    let (p, theta) = (params.p(), params.theta());
    let n = params.dim();
    let unclassifiable = || {
        Err(KsError::Unclassifiable(format!(
            "no supercritical case applies to N = {n}, p = {p}, θ = {theta}, m = {m}"
        )))
    };
    if n < 3 {
        return unclassifiable();
    }
    let p_star = params.p_star();
    let sob = params.sobolev_exponent();
    if p < p_star - P_EQ || p >= sob - P_EQ {
        return unclassifiable();
    }
    let q = 1.0 / (p - 1.0);
    let p_is_two = (p - 2.0).abs() <= P_EQ;
    // Window of M_θ(u) = 1/μ with μ ∈ (0, λ₊).
    let window = if theta >= 0.0 {
        Window { lo: 0.0, hi: None }
    } else {
        Window { lo: (-m / theta).powf(-(p - 1.0)), hi: None }
    };
    let case_label = if p > 2.0 + P_EQ && theta > 0.0 {
        "case 1: p > 2, theta > 0"
    } else if p_is_two && theta > 0.0 && m < 1.0 {
        "case 2: p = 2, theta > 0, m < 1"
    } else if p < 2.0 - P_EQ && theta < 0.0 {
        "case 3: p < 2, theta < 0"
    } else if !p_is_two && theta == 0.0 {
        "case 4: p != 2, theta = 0"
    } else if p_is_two && theta == 0.0 && (4..=5).contains(&n) && m == 1.0 {
        return Ok(ScalarBranchReport {
            branch: Branch::SupercriticalSource,
            lambda_bar: None,
            m,
            case_label: "family: N in {4, 5}, p = 2, theta = 0, m = 1".into(),
            lambda_window: window,
            m_theta: None,
            scale: None,
            family_flag: true,
            branch_defect: None,
        });
    } else {
        return unclassifiable();
    };

    // g(M) = θ + m M^{q} - M on (0, ∞).
    let g = |big_m: f64| theta + m * big_m.powf(q) - big_m;
    let big_m = if p_is_two {
        theta / (1.0 - m)
    } else if theta == 0.0 {
        m.powf((p - 1.0) / (p - 2.0))
    } else {
        let lo = window.lo.max(0.0);
        let mut hi = (lo + 1.0).max(2.0 * theta.abs());
        while g(hi).signum() == g(lo).signum() || g(lo) == 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(KsError::BracketFailure { lo, hi, f_values: Vec::new() });
            }
            if g(lo) == 0.0 {
                break;
            }
        }
        bisect_plain(g, lo, hi, 1e-16 * hi, 0.0, 400)
            .ok_or_else(|| KsError::BracketFailure { lo, hi, f_values: vec![(lo, g(lo)), (hi, g(hi))] })?
            .x
    };
    let mu = 1.0 / big_m;
    let defect = 1.0 / (mu.powf(-q) * m + theta) - mu;
    Ok(ScalarBranchReport {
        branch: Branch::SupercriticalSource,
        lambda_bar: Some(big_m),
        m,
        case_label: case_label.into(),
        lambda_window: window,
        m_theta: Some(big_m),
        scale: Some(big_m.powf(q)),
        family_flag: false,
        branch_defect: Some(defect),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongSummary {
    /// `M_θ` of the rescaled profile, recomputed from its gradient mass.
    pub m_theta_measured: Option<f64>,
    pub m_theta_expected: Option<f64>,
    pub kirchhoff_defect: Option<f64>,
    /// `lim u r^{2/(p-1)}` predicted from `c_p` and `M_θ`.
    pub coeff_expected: Option<f64>,
    pub coeff_measured: Option<f64>,
    pub coeff_rel_error: Option<f64>,
    /// `(λ, M_θ(λ w))` for the unit-mass normalisation `w = v/m` (family case).
    pub family_checks: Vec<(f64, f64)>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub profile: ProfileReport,
    pub branch: ScalarBranchReport,
    pub summary: StrongSummary,
}

/// Profile, gradient mass, scalar root and the rescaled Kirchhoff solution.
pub fn end_to_end_strong(params: &Params, regime: Regime, grid: &RadialGrid, tol: f64) -> Result<EndToEndReport> {
    let profile = strong_profile(params, regime, grid, tol)?;
    let m = profile.grad_mass.ok_or_else(|| {
        KsError::Divergence("the profile has infinite gradient mass; p must exceed (N+1)/(N-1)".into())
    })?;
    let branch_kind = match regime {
        Regime::Absorption => Branch::NegativeThetaAbsorption,
        Regime::Source => Branch::SupercriticalSource,
    };
    let family_case = regime == Regime::Source
        && (params.p() - 2.0).abs() <= P_EQ
        && params.theta() == 0.0
        && (4..=5).contains(&params.dim());
    let branch_m = if family_case { 1.0 } else { m };
    let branch = scalar_branch(params, branch_m, branch_kind)?;

    let mut summary = StrongSummary {
        m_theta_measured: None,
        m_theta_expected: None,
        kirchhoff_defect: None,
        coeff_expected: None,
        coeff_measured: None,
        coeff_rel_error: None,
        family_checks: Vec::new(),
        ok: false,
    };
    if branch.family_flag {
        let unit = profile.profile.scaled(1.0 / m);
        for lambda in [0.5, 2.0] {
            let mt = gradient_mass(&unit.scaled(lambda), params)?.m_theta;
            summary.family_checks.push((lambda, mt));
        }
        summary.ok = summary.family_checks.iter().all(|(l, mt)| (mt - l).abs() <= 1e-3);
        return Ok(EndToEndReport { profile, branch, summary });
    }

    let scale = branch.scale.expect("non-family branches carry a scale");
    let expected = branch.m_theta.expect("non-family branches carry M_θ");
    let u = profile.profile.scaled(scale);
    let measured = gradient_mass(&u, params)?.m_theta;
    let defect = (measured - expected).abs();
    let p = params.p();
    let coeff_expected = if profile.critical {
        profile.expected_coeff * expected.abs().powf(0.5 * (params.dim_f64() - 2.0))
    } else {
        profile.expected_coeff * expected.abs().powf(1.0 / (p - 1.0))
    };
    let coeff_measured = if profile.critical {
        profile.coeff_fit * scale
    } else {
        fixed_exponent_coeff(&u, 2.0 / (p - 1.0), 10.0 * grid.r_min())
    };
    let rel = (coeff_measured / coeff_expected - 1.0).abs();
    summary.m_theta_measured = Some(measured);
    summary.m_theta_expected = Some(expected);
    summary.kirchhoff_defect = Some(defect);
    summary.coeff_expected = Some(coeff_expected);
    summary.coeff_measured = Some(coeff_measured);
    summary.coeff_rel_error = Some(rel);
    summary.ok = defect <= 1e-3 && rel <= 0.02;
    Ok(EndToEndReport { profile, branch, summary })
}
