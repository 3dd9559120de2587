//! Solvers for the Dirac-sourced problems.
//!
//! * [`weak_singularity_solve`]: Picard iteration of
//!   `T v = G[(v + k w₀)^p] / M_θ(v + k w₀)` on the order interval
//!   `0 <= v <= t_p k^p w₁` (positive Kirchhoff branch).
//! * [`absorption_solve`]: `-Δu + λ u^p = k δ₀` with zero boundary data.
//! * [`negative_branch_solve`]: the root of `F(λ) = 1/(-M_θ(u_λ)) - λ`, which
//!   yields a solution with `θ < M_θ(u) < k + θ < 0`.

use serde::{Deserialize, Serialize};

use crate::constants::{ap_from_pair, barrier_scale, check_condition};
use crate::error::{domain, KsError, Result};
use crate::green::{dirac_potential, green_apply, potential_pair};
use crate::mass::{gradient_mass, weak_residual, weak_residual_weighted};
use crate::radial::{Params, RadialFn, RadialGrid};
use crate::roots::bisect;

const BARRIER_SLACK: f64 = 1e-9;
/// Inner tolerance of the absorption solves behind `F(λ)`.
const BRANCH_INNER_TOL: f64 = 1e-11;
const BRANCH_MAX_ITER: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub profile: RadialFn,
    pub v_part: RadialFn,
    pub m_theta: f64,
    pub iterations: usize,
    pub fixed_point_residual: f64,
    pub weak_residual: f64,
    /// `A` in the fit `u ≈ A Φ + B` near the origin.
    pub singular_coeff_measured: f64,
    /// `"r^(2-N)"` or `"-ln r"`.
    pub fit_basis: String,
    /// Barrier set membership (fixed point) or the sandwich bounds (absorption).
    pub barrier_ok: bool,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub lambda_1: f64,
    pub lambda_2: f64,
    #[serde(rename = "F_values")]
    pub f_values: Vec<(f64, f64)>,
    pub root: f64,
    pub f_at_root: f64,
    pub m_theta_at_root: f64,
    pub bracket_sign_change: bool,
    pub continuity_modulus_check: f64,
    /// `λ₂ < λ₁` as measured.
    pub lambda_2_below_lambda_1: bool,
    pub bisection_iterations: usize,
    pub solution: SolveReport,
}

/// Initial iterate of the fixed-point map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakStart {
    /// `v⁰ = 0`.
    Zero,
    /// `v⁰ = t_p k^p w₁`, the top of the barrier set.
    Top,
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn fit_basis(params: &Params) -> &'static str {
    if params.dim() == 2 {
        "-ln r"
    } else {
        "r^(2-N)"
    }
}

/// Least-squares coefficient of `Φ` over the first two decades of the grid.
pub fn measure_singular_coeff(u: &RadialFn, params: &Params) -> f64 {
    let r_cut = (100.0 * u.grid().r_min()).min(1e-2);
    u.fit_against(|r| params.phi(r), r_cut)
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    sup_diff(new, old) / sup_abs(new).max(f64::MIN_POSITIVE)
}

/// Constructs a nonnegative solution with `M_θ(u) >= θ + k` via Picard
/// iteration of the barrier map, starting from `v⁰ = 0`.
pub fn weak_singularity_solve(params: &Params, grid: &RadialGrid, tol: f64, max_iter: usize) -> Result<SolveReport> {
    weak_singularity_solve_from(params, grid, tol, max_iter, WeakStart::Zero)
}

pub fn weak_singularity_solve_from(
    params: &Params,
    grid: &RadialGrid,
    tol: f64,
    max_iter: usize,
    start: WeakStart,
) -> Result<SolveReport> {
    params.require_subcritical()?;
    let (p, theta, k) = (params.p(), params.theta(), params.k());
    if theta + k <= 0.0 {
        return domain(format!("θ + k = {} must be positive", theta + k));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return domain("tolerance and iteration cap must be positive");
    }
    let pair = potential_pair(params, grid)?;
    let condition = check_condition(params, ap_from_pair(&pair))?;
    if !condition.admissible {
        return domain(format!(
            "admissibility fails: k^(p-1)/(θ+k) = {} > {}",
            condition.lhs_at_k, condition.rhs
        ));
    }
    let (_, t_p) = barrier_scale(params)?;
    let upper = pair.w1.scaled(t_p * k.powf(p));
    let slack = BARRIER_SLACK * upper.max_abs();
    let kw0 = pair.w0.scaled(k);

    let mut v = match start {
        WeakStart::Zero => RadialFn::zeros(grid),
        WeakStart::Top => upper.clone(),
    };
    let mut history = Vec::new();
    let mut omega = 1.0;
    for it in 1..=max_iter {
        let u = v.add(&kw0)?;
        let m = gradient_mass(&u, params)?.m_theta;
        let tv = green_apply(&u.pow(p), params)?.scaled(1.0 / m);
        if let Some(i) = (0..grid.len()).find(|&i| {
            let x = tv.values()[i];
            x < -slack || x > upper.values()[i] + slack
        }) {
            return Err(KsError::BarrierEscape { iteration: it, r: grid.nodes()[i] });
        }
        let res = relative_change(tv.values(), v.values());
        if history.last().is_some_and(|&prev| res > prev) {
            omega = 0.5;
        }
        history.push(res);
        let next = if omega == 1.0 { tv } else { v.combine(1.0 - omega, &tv, omega)? };
        v = next;
        if res <= tol {
            return finish_weak(params, v, &kw0, &upper, slack, it, history);
        }
    }
    Err(KsError::IterationFailure { iterations: max_iter, residual_history: history })
}

fn finish_weak(
    params: &Params,
    v: RadialFn,
    kw0: &RadialFn,
    upper: &RadialFn,
    slack: f64,
    iterations: usize,
    history: Vec<f64>,
) -> Result<SolveReport> {
    let profile = v.add(kw0)?;
    let m_theta = gradient_mass(&profile, params)?.m_theta;
    let weak = weak_residual(&profile, params, m_theta)?;
    let barrier_ok = v
        .values()
        .iter()
        .zip(upper.values())
        .all(|(x, top)| *x >= -slack && *x <= top + slack);
    Ok(SolveReport {
        singular_coeff_measured: measure_singular_coeff(&profile, params),
        fit_basis: fit_basis(params).to_string(),
        fixed_point_residual: *history.last().unwrap_or(&0.0),
        profile,
        v_part: v,
        m_theta,
        iterations,
        weak_residual: weak,
        barrier_ok,
        residual_history: history,
    })
}

/// Solves `-Δu + λ u^p = k δ₀` in `B_1`, `u = 0` on the boundary.
///
/// Iterates `u ← max(k w₀ - λ G[u^p], 0)` from `u = k w₀`, halving the step
/// when the change grows; the residual is measured on the regular part
/// `u - k w₀`.
pub fn absorption_solve(params: &Params, lambda: f64, grid: &RadialGrid, tol: f64) -> Result<SolveReport> {
    absorption_solve_capped(params, lambda, grid, tol, BRANCH_MAX_ITER)
}

pub fn absorption_solve_capped(
    params: &Params,
    lambda: f64,
    grid: &RadialGrid,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("λ = {lambda} must be a finite nonnegative number"));
    }
    if !(params.k() > 0.0) {
        return domain(format!("Dirac weight k = {} must be positive", params.k()));
    }
    params.require_subcritical()?;
    let p = params.p();
    let k = params.k();
    let kw0 = dirac_potential(params, grid).scaled(k);

    let mut u = kw0.clone();
    let mut v = RadialFn::zeros(grid);
    let mut history = Vec::new();
    let mut iterations = 0;
    if lambda > 0.0 {
        let mut omega: f64 = 1.0;
        let mut converged = false;
        for it in 1..=max_iter {
            iterations = it;
            let g = green_apply(&u.pow(p), params)?;
            let target: Vec<f64> = kw0
                .values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| (a - lambda * b).max(0.0))
                .collect();
            let target_v: Vec<f64> = target.iter().zip(kw0.values()).map(|(t, a)| t - a).collect();
            let res = relative_change(&target_v, v.values());
            if history.last().is_some_and(|&prev| res > prev) {
                omega = (omega * 0.5).max(1.0 / 16.0);
            }
            history.push(res);
            let new_v: Vec<f64> = v
                .values()
                .iter()
                .zip(&target_v)
                .map(|(old, t)| old + omega * (t - old))
                .collect();
            v = RadialFn::new(grid.clone(), new_v, g.tag(), -lambda * g.coeff())?;
            u = kw0.add(&v)?;
            if res <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(KsError::IterationFailure { iterations: max_iter, residual_history: history });
        }
    }

    let lower = {
        let g1 = green_apply(&dirac_potential(params, grid).pow(p), params)?;
        kw0.combine(1.0, &g1, -lambda * k.powf(p))?
    };
    let scale = kw0.max_abs();
    let sandwich = u
        .values()
        .iter()
        .zip(kw0.values())
        .zip(lower.values())
        .all(|((x, hi), lo)| *x <= hi + 1e-12 * scale && *x >= lo - 1e-12 * scale && *x >= 0.0);
    let m_theta = gradient_mass(&u, params)?.m_theta;
    let weak = weak_residual_weighted(&u, params, -lambda)?;
    Ok(SolveReport {
        singular_coeff_measured: measure_singular_coeff(&u, params),
        fit_basis: fit_basis(params).to_string(),
        fixed_point_residual: history.last().copied().unwrap_or(0.0),
        profile: u,
        v_part: v,
        m_theta,
        iterations,
        weak_residual: weak,
        barrier_ok: sandwich,
        residual_history: history,
    })
}

fn negative_mass(params: &Params, lambda: f64, grid: &RadialGrid) -> Result<f64> {
    let m = absorption_solve(params, lambda, grid, BRANCH_INNER_TOL)?.m_theta;
    if m >= 0.0 {
        return Err(KsError::RegimeMismatch(format!("M_θ(u_λ) = {m} is not negative at λ = {lambda}")));
    }
    Ok(m)
}

/// `F(λ) = 1/(-M_θ(u_λ)) - λ` with `u_λ` the absorption solution.
pub fn branch_function(params: &Params, lambda: f64, grid: &RadialGrid) -> Result<f64> {
    Ok(-1.0 / negative_mass(params, lambda, grid)? - lambda)
}

/// Finds `λ*` with `1/(-M_θ(u_λ*)) = λ*` where `u_λ` solves the absorption
/// problem, for `θ < 0` and `0 < k < -θ`.
pub fn negative_branch_solve(params: &Params, grid: &RadialGrid, tol: f64) -> Result<BranchReport> {
    let (theta, k) = (params.theta(), params.k());
    if !(theta < 0.0) {
        return domain(format!("negative branch needs θ < 0, got {theta}"));
    }
    if !(k > 0.0 && k < -theta) {
        return domain(format!("k = {k} must lie in (0, -θ) = (0, {})", -theta));
    }
    params.require_subcritical()?;
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }

    let solve = |lambda: f64| absorption_solve(params, lambda, grid, BRANCH_INNER_TOL);
    let m_of = |lambda: f64| negative_mass(params, lambda, grid);
    let f_of = |lambda: f64| -> Result<f64> { Ok(-1.0 / m_of(lambda)? - lambda) };

    let lambda_1 = -1.0 / (k + theta);
    let lambda_2 = -1.0 / m_of(lambda_1)?;
    let (lo, hi) = (lambda_1.min(lambda_2), lambda_1.max(lambda_2));
    let f_lo = f_of(lo)?;
    let f_hi = f_of(hi)?;
    let mut f_values = vec![(lo, f_lo), (hi, f_hi)];
    let bracket_sign_change = f_lo * f_hi <= 0.0;
    if !bracket_sign_change {
        return Err(KsError::BracketFailure { lo, hi, f_values });
    }

    let root = bisect(f_of, lo, hi, 1e-15 * hi, tol, 200)?.expect("bracket has a sign change");
    f_values.push((root.x, root.fx));

    // Continuity of λ ↦ M_θ(u_λ) on five nested pairs.
    let mut modulus: f64 = f64::NEG_INFINITY;
    let m_lo = m_of(lo)?;
    for j in 1..=5 {
        let l2 = lo + (hi - lo) * j as f64 / 5.0;
        let m2 = m_of(l2)?;
        f_values.push((l2, -1.0 / m2 - l2));
        let bound = ((l2 - lo) / lo).powf(1.0 / params.p()) * k;
        modulus = modulus.max((m_lo - m2).abs() - bound);
    }
    f_values.sort_by(|a, b| a.0.total_cmp(&b.0));
    f_values.dedup_by(|a, b| a.0 == b.0);

    let solution = solve(root.x)?;
    Ok(BranchReport {
        lambda_1,
        lambda_2,
        f_values,
        root: root.x,
        f_at_root: root.fx,
        m_theta_at_root: solution.m_theta,
        bracket_sign_change,
        continuity_modulus_check: modulus,
        lambda_2_below_lambda_1: lambda_2 < lambda_1,
        bisection_iterations: root.iterations,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::radial::make_grid;

    fn default_grid() -> RadialGrid {
        make_grid(1e-6, 4096).unwrap()
    }

    #[test]
    fn weak_solution_defaults() {
        let params = Params::new(3, 2.0, 1.0, 1.0).unwrap();
        let g = default_grid();
        let rep = weak_singularity_solve(&params, &g, 1e-6, 200).unwrap();
        assert!(rep.fixed_point_residual <= 1e-6);
        assert!(rep.barrier_ok);
        assert!(rep.m_theta >= 2.0);
        assert!(rep.weak_residual <= 1e-4, "{}", rep.weak_residual);
        let c = 1.0 / (4.0 * PI);
        assert!((rep.singular_coeff_measured / c - 1.0).abs() < 0.02);
        // profile = v + k w₀
        let w0 = dirac_potential(&params, &g);
        for i in (0..g.len()).step_by(97) {
            let sum = rep.v_part.values()[i] + w0.values()[i];
            assert!((rep.profile.values()[i] - sum).abs() <= 1e-15 * sum.abs().max(1.0));
        }
    }

    #[test]
    fn weak_solution_mass_window() {
        let params = Params::new(3, 2.0, 1.0, 1.0).unwrap();
        let g = default_grid();
        let rep = weak_singularity_solve(&params, &g, 1e-6, 200).unwrap();
        let pair = potential_pair(&params, &g).unwrap();
        let (_, t_p) = barrier_scale(&params).unwrap();
        let top = gradient_mass(&pair.w1.scaled(t_p), &params).unwrap().grad_mass;
        assert!(rep.m_theta >= 2.0 - 1e-3 && rep.m_theta <= 2.0 + top + 1e-3);
    }

    #[test]
    fn fixed_point_is_stable_from_the_top() {
        let params = Params::new(3, 2.0, 1.0, 1.0).unwrap();
        let g = make_grid(1e-6, 2048).unwrap();
        let tol = 1e-8;
        let a = weak_singularity_solve_from(&params, &g, tol, 400, WeakStart::Zero).unwrap();
        let b = weak_singularity_solve_from(&params, &g, tol, 400, WeakStart::Top).unwrap();
        let scale = sup_abs(a.v_part.values());
        assert!(sup_diff(a.v_part.values(), b.v_part.values()) <= 10.0 * tol * scale);
    }

    #[test]
    fn vanishing_weight_collapses_to_potential() {
        let params = Params::new(3, 2.0, 1.0, 1e-6).unwrap();
        let rep = weak_singularity_solve(&params, &default_grid(), 1e-6, 200).unwrap();
        assert!(rep.v_part.max_abs() <= 1e-8);
    }

    #[test]
    fn planar_quadratic_weight_one() {
        let params = Params::new(2, 2.0, 0.0, 1.0).unwrap();
        let rep = weak_singularity_solve(&params, &default_grid(), 1e-6, 200).unwrap();
        assert!(rep.barrier_ok);
        assert!((rep.singular_coeff_measured * 2.0 * PI - 1.0).abs() < 0.02);
    }

    #[test]
    fn inadmissible_weight_is_rejected() {
        // θ = 0, p = 2 with a₂ < 1/4 admits every k; p > 2 at θ = 0 caps k.
        let params = Params::new(2, 3.0, 0.0, 1e6).unwrap();
        assert!(matches!(
            weak_singularity_solve(&params, &make_grid(1e-4, 256).unwrap(), 1e-6, 50),
            Err(KsError::Domain(_))
        ));
    }

    #[test]
    fn absorption_without_absorption_is_the_potential() {
        let params = Params::new(3, 1.5, 0.0, 1.0).unwrap();
        let g = make_grid(1e-4, 256).unwrap();
        let rep = absorption_solve(&params, 0.0, &g, 1e-10).unwrap();
        assert_eq!(rep.profile.values(), dirac_potential(&params, &g).values());
        assert!(absorption_solve(&params, -1.0, &g, 1e-10).is_err());
    }

    #[test]
    fn absorption_order_and_sandwich() {
        let params = Params::new(3, 1.5, 0.0, 1.0).unwrap();
        let g = default_grid();
        let a = absorption_solve(&params, 0.5, &g, 1e-10).unwrap();
        let b = absorption_solve(&params, 1.0, &g, 1e-10).unwrap();
        assert!(a.barrier_ok && b.barrier_ok);
        assert!(a.profile.values().iter().zip(b.profile.values()).all(|(x, y)| x >= y));
        let c = 1.0 / (4.0 * PI);
        assert!((b.singular_coeff_measured / c - 1.0).abs() < 0.02);
        assert!(b.weak_residual < 1e-6, "{}", b.weak_residual);
    }

    #[test]
    fn negative_branch_example() {
        let params = Params::new(3, 1.5, -2.0, 1.0).unwrap();
        let rep = negative_branch_solve(&params, &default_grid(), 1e-8).unwrap();
        assert_eq!(rep.lambda_1, 1.0);
        assert!(rep.bracket_sign_change);
        assert!(rep.f_at_root.abs() <= 1e-8);
        assert!(rep.m_theta_at_root > -2.0 && rep.m_theta_at_root < -1.0);
        assert!((-1.0 / rep.m_theta_at_root - rep.root).abs() <= 1e-8);
        assert!(rep.continuity_modulus_check <= 1e-8);
    }

    #[test]
    fn negative_branch_domain() {
        let g = make_grid(1e-4, 64).unwrap();
        let params = Params::new(3, 1.5, -2.0, 3.0).unwrap();
        assert!(matches!(negative_branch_solve(&params, &g, 1e-8), Err(KsError::Domain(_))));
        let params = Params::new(3, 1.5, 1.0, 0.5).unwrap();
        assert!(matches!(negative_branch_solve(&params, &g, 1e-8), Err(KsError::Domain(_))));
    }
}
