//! The Kirchhoff functional `M_θ(u) = θ + ∫|∇u| dx` for radially
//! non-increasing profiles and the distributional residual of
//! `-M_θ(u) Δu = u^p + k δ₀`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, KsError, Result};
use crate::radial::{quad, Params, RadialFn};

const MONOTONE_TOL: f64 = 1e-9;
const BOUNDARY_TOL: f64 = 1e-6;
const EXP_EQ: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    /// `∫_{B_1} |∇u| dx`.
    pub grad_mass: f64,
    pub m_theta: f64,
    /// `σ_N lim_{r→0} u(r) r^{N-1}`.
    pub boundary_flux_term: f64,
    /// `(N-1) σ_N ∫_0^1 u(s) s^{N-2} ds`.
    pub l1_weighted: f64,
}

impl MassReport {
    /// Relative defect of `grad_mass = boundary_flux_term + l1_weighted`.
    pub fn identity_defect(&self) -> f64 {
        let rhs = self.boundary_flux_term + self.l1_weighted;
        (self.grad_mass - rhs).abs() / self.grad_mass.abs().max(f64::MIN_POSITIVE)
    }
}

/// `lim_{r→0} u(r) r^{N-1}` from the singular model.
fn flux_limit(u: &RadialFn, n: f64) -> Result<f64> {
    let Some((a, b)) = u.tag().exponents() else {
        return Ok(0.0);
    };
    if u.coeff() == 0.0 {
        return Ok(0.0);
    }
    let e = a + n - 1.0;
    if e > EXP_EQ || (e.abs() <= EXP_EQ && b < 0.0) {
        Ok(0.0)
    } else if e.abs() <= EXP_EQ && b == 0.0 {
        Ok(u.coeff())
    } else {
        Err(KsError::Divergence(format!(
            "u(r) r^{} is unbounded as r → 0",
            n - 1.0
        )))
    }
}

fn check_profile(u: &RadialFn) -> Result<()> {
    let scale = u.max_abs();
    let v = u.values();
    if let Some(&last) = v.last() {
        if last.abs() > BOUNDARY_TOL * scale.max(1.0) {
            return domain(format!("profile does not vanish at r = 1 (u(1) = {last:e})"));
        }
    }
    let tol = MONOTONE_TOL * scale;
    for i in 0..v.len().saturating_sub(1) {
        if v[i + 1] - v[i] > tol {
            return Err(KsError::Monotonicity { r: u.grid().nodes()[i] });
        }
    }
    Ok(())
}

/// Computes `∫|∇u| dx = σ_N ∫_0^1 (-u') r^{N-1} dr` and the terms of the
/// integration-by-parts identity.
pub fn gradient_mass(u: &RadialFn, params: &Params) -> Result<MassReport> {
    check_profile(u)?;
    let n = params.dim_f64();
    let sigma = params.sigma_n();
    let grid = u.grid();

    let flux = flux_limit(u, n)?;
    let weighted_tail = u.tail_moment(n - 2.0)?;
    let rho = grid.r_min();
    // ∫_0^ρ (-u') r^{N-1} dr = flux - u(ρ) ρ^{N-1} + (N-1) ∫_0^ρ u r^{N-2} dr
    let tail = flux - u.values()[0] * rho.powf(n - 1.0) + (n - 1.0) * weighted_tail;

    let du = u.log_derivative();
    let integrand: Vec<f64> = du
        .iter()
        .zip(grid.log_nodes())
        .map(|(d, t)| -d * ((n - 1.0) * t).exp())
        .collect();
    let grad_mass = sigma * (tail + quad::integrate(&integrand, grid.log_step()));

    let l1_weighted = (n - 1.0) * sigma * u.moment(n - 2.0)?;
    Ok(MassReport {
        grad_mass,
        m_theta: params.theta() + grad_mass,
        boundary_flux_term: sigma * flux,
        l1_weighted,
    })
}

/// `∫ u (-Δξ_j) dx - w ∫ u^p ξ_j dx - k ξ_j(0)` for `ξ_j = (1 - |x|²)^j`.
fn weak_defect(u: &RadialFn, params: &Params, j: u32, weight: f64) -> Result<f64> {
    let n = params.dim_f64();
    let sigma = params.sigma_n();
    let e = n - 1.0;
    let linear = match j {
        1 => 2.0 * n * u.moment(e)?,
        2 => 4.0 * n * u.moment(e)? - (4.0 * n + 8.0) * u.moment(e + 2.0)?,
        _ => unreachable!("test family has j ∈ {{1, 2}}"),
    };
    let nonlinear = if weight == 0.0 {
        0.0
    } else {
        let up = u.pow(params.p());
        match j {
            1 => up.moment(e)? - up.moment(e + 2.0)?,
            _ => up.moment(e)? - 2.0 * up.moment(e + 2.0)? + up.moment(e + 4.0)?,
        }
    };
    Ok(sigma * (linear - weight * nonlinear) - params.k())
}

/// Distributional residual against `ξ_j = (1 - |x|²)^j`, `j = 1, 2`, with
/// the nonlinear term weighted by `1/m_theta`.
pub fn weak_residual(u: &RadialFn, params: &Params, m_theta: f64) -> Result<f64> {
    if m_theta == 0.0 || !m_theta.is_finite() {
        return Err(KsError::DivisionDomain(format!("M_θ(u) = {m_theta} cannot divide")));
    }
    weak_residual_weighted(u, params, 1.0 / m_theta)
}

/// As [`weak_residual`] with an explicit weight on `∫ u^p ξ dx`.
pub fn weak_residual_weighted(u: &RadialFn, params: &Params, weight: f64) -> Result<f64> {
    let r1 = weak_defect(u, params, 1, weight)?.abs();
    let r2 = weak_defect(u, params, 2, weight)?.abs();
    Ok(r1.max(r2))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::green::{dirac_potential, potential_pair};
    use crate::radial::{make_grid, SingularTag};

    fn params(n: u32, theta: f64, k: f64) -> Params {
        Params::new(n, 2.0, theta, k).unwrap()
    }

    #[test]
    fn dirac_potential_has_unit_mass() {
        let g = make_grid(1e-6, 4096).unwrap();
        for n in [2, 3] {
            let p = params(n, 0.0, 1.0);
            let m = gradient_mass(&dirac_potential(&p, &g), &p).unwrap();
            assert!((m.grad_mass - 1.0).abs() < 1e-6, "N={n}: {}", m.grad_mass);
            assert_eq!(m.boundary_flux_term, 0.0);
            assert!(m.identity_defect() < 1e-6);
        }
    }

    #[test]
    fn kirchhoff_value_of_scaled_potential() {
        let g = make_grid(1e-6, 4096).unwrap();
        for n in [2, 3] {
            let p = params(n, -0.7, 2.5);
            let w0 = dirac_potential(&p, &g);
            let m = gradient_mass(&w0.scaled(p.k()), &p).unwrap();
            assert!((m.m_theta - (p.k() + p.theta())).abs() < 1e-6);
            assert_eq!(m.m_theta, p.theta() + m.grad_mass);
        }
    }

    #[test]
    fn cone_profile() {
        let g = make_grid(1e-6, 4096).unwrap();
        let u = RadialFn::from_fn(&g, |r| 1.0 - r, SingularTag::None, 0.0).unwrap();
        let m = gradient_mass(&u, &params(3, 0.0, 1.0)).unwrap();
        assert!((m.grad_mass - 4.0 * PI / 3.0).abs() < 1e-8);
        assert!(m.identity_defect() < 1e-6);
    }

    #[test]
    fn identity_on_w1() {
        let g = make_grid(1e-6, 4096).unwrap();
        for n in [2, 3] {
            let p = params(n, 0.0, 1.0);
            let pair = potential_pair(&p, &g).unwrap();
            let m = gradient_mass(&pair.w1, &p).unwrap();
            assert!(m.identity_defect() < 1e-6, "N={n}: {}", m.identity_defect());
            let sum = pair.w0.add(&pair.w1).unwrap();
            let big = gradient_mass(&sum, &p).unwrap();
            let small = gradient_mass(&pair.w0, &p).unwrap();
            assert!(big.grad_mass >= small.grad_mass);
        }
    }

    #[test]
    fn increasing_profile_is_rejected() {
        let g = make_grid(1e-3, 64).unwrap();
        let u = RadialFn::from_fn(&g, |r| (r - 0.5).powi(2) - 0.25, SingularTag::None, 0.0).unwrap();
        assert!(matches!(gradient_mass(&u, &params(3, 0.0, 1.0)), Err(KsError::Monotonicity { .. })));
    }

    #[test]
    fn strong_flux_diverges() {
        let g = make_grid(1e-3, 64).unwrap();
        let u = RadialFn::from_fn(&g, |r| r.powf(-2.5) - 1.0, SingularTag::Power { alpha: -2.5 }, 1.0).unwrap();
        assert!(matches!(gradient_mass(&u, &params(3, 0.0, 1.0)), Err(KsError::Divergence(_))));
    }

    #[test]
    fn dirac_identity_without_nonlinearity() {
        let g = make_grid(1e-6, 4096).unwrap();
        let p = params(3, 0.0, 1.0);
        let w0 = dirac_potential(&p, &g);
        let r = weak_residual_weighted(&w0, &p, 0.0).unwrap();
        assert!(r < 1e-8, "{r}");
        let p2 = params(2, 0.0, 1.0);
        assert!(weak_residual_weighted(&dirac_potential(&p2, &g), &p2, 0.0).unwrap() < 1e-8);
    }

    #[test]
    fn zero_solution() {
        let g = make_grid(1e-4, 64).unwrap();
        let p = params(3, 1.0, 0.0);
        assert_eq!(weak_residual(&RadialFn::zeros(&g), &p, 1.0).unwrap(), 0.0);
        assert!(matches!(weak_residual(&RadialFn::zeros(&g), &p, 0.0), Err(KsError::DivisionDomain(_))));
    }

    #[test]
    fn exact_sampled_solution_has_small_residual() {
        // w₀ + w₁ solves -Δu = w₀² + δ₀; test against ξ₁ = 1 - r².
        let g = make_grid(1e-6, 4096).unwrap();
        let p = params(3, 0.0, 1.0);
        let pair = potential_pair(&p, &g).unwrap();
        let u = pair.w0.add(&pair.w1).unwrap();
        let src = pair.w0.pow(2.0);
        let n = 3.0;
        let sigma = p.sigma_n();
        let lin = sigma * (2.0 * n * u.moment(2.0).unwrap());
        let non = sigma * (src.moment(2.0).unwrap() - src.moment(4.0).unwrap());
        assert!((lin - non - 1.0).abs() < 1e-7, "{}", lin - non - 1.0);
    }
}
