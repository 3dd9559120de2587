//! Green operator of `-Δ` on the unit ball with zero Dirichlet data.
//!
//! For radial sources the operator reduces to two nested integrals,
//!
//! ```text
//! G[f](r) = ∫_r^1 s^{1-N} m(s) ds,    m(s) = ∫_0^s t^{N-1} f(t) dt,
//! ```
//!
//! which are evaluated as cumulative quadratures in `t = ln r`. The mass
//! below `r_min` comes from the source's singular model, and the singular
//! model of the result is derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, KsError, Result};
use crate::radial::{quad, Params, RadialFn, RadialGrid, SingularTag};

const EXP_EQ: f64 = 1e-12;

/// Near-origin behaviour of `G[|x|^{-τ}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayClass {
    Power { exponent: f64 },
    Log,
    Bounded,
}

/// `w₀ = G[δ₀]` and `w₁ = G[w₀^p]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialPair {
    pub w0: RadialFn,
    pub w1: RadialFn,
}

/// Closed-form Dirac potential of the ball.
///
/// `w₀(r) = c_N (r^{2-N} - 1)` for `N ≥ 3` and `-(1/2π) ln r` for `N = 2`.
pub fn dirac_potential(params: &Params, grid: &RadialGrid) -> RadialFn {
    let c = params.c_n();
    let n = params.dim_f64();
    let built = if params.dim() == 2 {
        RadialFn::from_fn(grid, |r| -c * r.ln(), SingularTag::Log, c)
    } else {
        RadialFn::from_fn(
            grid,
            |r| c * (r.powf(2.0 - n) - 1.0),
            SingularTag::Power { alpha: 2.0 - n },
            c,
        )
    };
    let mut w0 = built.expect("closed-form potential is finite on the grid");
    // Dirichlet value is exact.
    let last = w0.len() - 1;
    if w0.values()[last] != 0.0 {
        let mut v = w0.clone().into_values();
        v[last] = 0.0;
        w0 = RadialFn::new(grid.clone(), v, w0.tag(), w0.coeff()).expect("same grid");
    }
    w0
}

/// Applies the radial Green operator to `f`.
pub fn green_apply(f: &RadialFn, params: &Params) -> Result<RadialFn> {
    let n = params.dim_f64();
    let grid = f.grid();
    let h = grid.log_step();
    let t = grid.log_nodes();

    let (tag, coeff) = output_model(f, n)?;
    let mass_tail = f.tail_moment(n - 1.0)?;

    let inner: Vec<f64> = f.values().iter().zip(t).map(|(v, t)| v * (n * t).exp()).collect();
    let mass = quad::cumulative(&inner, h);
    let outer: Vec<f64> = mass
        .iter()
        .zip(t)
        .map(|(m, t)| (mass_tail + m) * ((2.0 - n) * t).exp())
        .collect();
    let values = quad::cumulative_from_right(&outer, h);
    RadialFn::new(grid.clone(), values, tag, coeff)
}

/// Singular model of `G[f]` from the model of `f`.
fn output_model(f: &RadialFn, n: f64) -> Result<(SingularTag, f64)> {
    let Some((a, b)) = f.tag().exponents() else {
        return Ok((SingularTag::None, 0.0));
    };
    let c = f.coeff();
    if a + n <= EXP_EQ && c != 0.0 {
        return Err(KsError::Divergence(format!(
            "source ~ r^{a} has infinite mass near the origin in dimension {n}"
        )));
    }
    if a + 2.0 > EXP_EQ {
        Ok((SingularTag::None, 0.0))
    } else if a + 2.0 < -EXP_EQ {
        Ok((
            SingularTag::from_exponents(a + 2.0, b),
            c / ((n + a) * (-a - 2.0)),
        ))
    } else if b > -1.0 {
        Ok((SingularTag::from_exponents(0.0, b + 1.0), c / ((n - 2.0) * (b + 1.0))))
    } else {
        Ok((SingularTag::None, 0.0))
    }
}

/// Classifies `G[|x|^{-τ}]` near the origin for `0 < τ < N`.
pub fn potential_decay_class(tau: f64, n: u32) -> Result<DecayClass> {
    let nf = n as f64;
    if !(tau > 0.0 && tau < nf) {
        return domain(format!("τ = {tau} must lie in (0, {nf})"));
    }
    Ok(if tau > 2.0 {
        DecayClass::Power { exponent: 2.0 - tau }
    } else if tau == 2.0 {
        DecayClass::Log
    } else {
        DecayClass::Bounded
    })
}

/// Computes `w₀` and `w₁ = G[w₀^p]`; requires `p < p*`.
pub fn potential_pair(params: &Params, grid: &RadialGrid) -> Result<PotentialPair> {
    params.require_subcritical()?;
    let w0 = dirac_potential(params, grid);
    let w1 = green_apply(&w0.pow(params.p()), params)?;
    Ok(PotentialPair { w0, w1 })
}

/// `max_i |-Δu_i - f_i| / max |f|` over interior nodes.
pub fn operator_residual(u: &RadialFn, f: &RadialFn, n: u32) -> f64 {
    let lap = u.laplacian(n as f64);
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    let len = lap.len();
    (2..len.saturating_sub(2))
        .map(|i| (-lap[i] - f.values()[i]).abs())
        .fold(0.0, f64::max)
        / scale
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::radial::make_grid;

    fn params(n: u32, p: f64) -> Params {
        Params::new(n, p, 0.0, 1.0).unwrap()
    }

    /// Independent oracle: `u(r) = (1/σ_N) ∫_r^1 s^{1-N} ds` by Simpson in `s`.
    fn flux_oracle(n: u32, r: f64) -> f64 {
        let sigma = crate::radial::unit_sphere_area(n);
        let m = 20_000;
        let h = (1.0 - r) / m as f64;
        let g = |s: f64| s.powf(1.0 - n as f64) / sigma;
        let mut acc = g(r) + g(1.0);
        for i in 1..m {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(r + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn dirac_potential_values() {
        let g = make_grid(0.5, 16).unwrap();
        let w3 = dirac_potential(&params(3, 2.0), &g);
        assert!((w3.values()[0] - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((w3.values()[0] - flux_oracle(3, 0.5)).abs() < 1e-10);
        assert_eq!(*w3.values().last().unwrap(), 0.0);
        let w2 = dirac_potential(&params(2, 2.0), &g);
        assert!((w2.values()[0] - 2f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!((w2.values()[0] - flux_oracle(2, 0.5)).abs() < 1e-10);
        assert_eq!(*w2.values().last().unwrap(), 0.0);
    }

    #[test]
    fn w1_matches_closed_form_in_three_dimensions() {
        let g = make_grid(1e-6, 4096).unwrap();
        let pair = potential_pair(&params(3, 2.0), &g).unwrap();
        let exact = |r: f64| (3.0 * (r - 1.0) - 3.0 * r.ln() - (r * r - 1.0) / 2.0) / (48.0 * PI * PI);
        for (r, v) in g.nodes().iter().zip(pair.w1.values()) {
            assert!((v - exact(*r)).abs() <= 1e-7 * exact(*r).max(1e-6), "r={r} {v} {}", exact(*r));
        }
        assert_eq!(pair.w1.tag(), SingularTag::Log);
        assert!((pair.w1.coeff() - 1.0 / (16.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn w1_at_half() {
        let g = make_grid(0.5f64.powi(12), 12 * 64 + 1).unwrap();
        let i = 11 * 64;
        assert!((g.nodes()[i] - 0.5).abs() < 1e-14);
        let pair = potential_pair(&params(3, 2.0), &g).unwrap();
        let at_half = (-1.5 + 3.0 * 2f64.ln() + 0.375) / (48.0 * PI * PI);
        assert!((at_half - 0.0020147).abs() < 1e-7);
        assert!((pair.w1.values()[i] - at_half).abs() < 1e-9, "{}", pair.w1.values()[i] - at_half);
    }

    #[test]
    fn zero_source() {
        let g = make_grid(1e-4, 64).unwrap();
        let u = green_apply(&RadialFn::zeros(&g), &params(3, 2.0)).unwrap();
        assert!(u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn decay_classes() {
        assert_eq!(potential_decay_class(2.5, 3).unwrap(), DecayClass::Power { exponent: -0.5 });
        assert_eq!(potential_decay_class(2.0, 3).unwrap(), DecayClass::Log);
        assert_eq!(potential_decay_class(1.5, 3).unwrap(), DecayClass::Bounded);
        assert!(potential_decay_class(3.0, 3).is_err());
        assert!(potential_decay_class(0.0, 3).is_err());
    }

    #[test]
    fn divergent_source_mass() {
        let g = make_grid(1e-4, 64).unwrap();
        let f = RadialFn::from_fn(&g, |r| r.powf(-3.0), SingularTag::Power { alpha: -3.0 }, 1.0).unwrap();
        assert!(matches!(green_apply(&f, &params(3, 2.0)), Err(KsError::Divergence(_))));
    }

    #[test]
    fn supercritical_pair_rejected() {
        let g = make_grid(1e-4, 64).unwrap();
        assert!(matches!(
            potential_pair(&params(3, 3.0), &g),
            Err(KsError::Supercritical { .. })
        ));
    }
}
