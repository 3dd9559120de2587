use ks_core::mass::gradient_mass;
use ks_core::strong::{end_to_end_strong, scaled_profile_residual, strong_profile, Regime};
use ks_core::{make_grid, Params};
use proptest::prelude::*;

#[test]
fn exponent_fit_is_stable_under_grid_doubling() {
    for (n, p, regime) in [(3, 2.0, Regime::Absorption), (3, 2.5, Regime::Absorption), (5, 2.0, Regime::Source)] {
        let params = Params::new(n, p, 0.0, 1.0).unwrap();
        let coarse = strong_profile(&params, regime, &make_grid(1e-6, 4096).unwrap(), 1e-6).unwrap();
        let fine = strong_profile(&params, regime, &make_grid(1e-6, 8192).unwrap(), 1e-6).unwrap();
        assert!((coarse.exponent_fit - fine.exponent_fit).abs() < 0.005);
        assert!((coarse.coeff_fit / fine.coeff_fit - 1.0).abs() < 5e-3);
    }
}

#[test]
fn negative_theta_absorption_end_to_end() {
    let params = Params::new(3, 2.2, -3.0, 1.0).unwrap();
    let rep = end_to_end_strong(&params, Regime::Absorption, &make_grid(1e-6, 4096).unwrap(), 1e-6).unwrap();
    let mt = rep.summary.m_theta_measured.unwrap();
    assert!(mt < 0.0);
    assert!(rep.summary.kirchhoff_defect.unwrap() <= 1e-3);
    assert!(rep.summary.coeff_rel_error.unwrap() <= 0.02);
    assert!(rep.summary.ok);
    assert!(rep.branch.lambda_window.contains(rep.branch.lambda_bar.unwrap()));
}

#[test]
fn absorption_source_term_is_not_integrable() {
    let params = Params::new(3, 2.0, 0.0, 1.0).unwrap();
    let rep = strong_profile(&params, Regime::Absorption, &make_grid(1e-6, 4096).unwrap(), 1e-6).unwrap();
    let masses: Vec<f64> = rep.truncated_source_mass.iter().map(|r| r[1]).collect();
    // ∫_ρ u² r² dr ~ ρ^{-1}: each decade multiplies it by about ten.
    for w in masses.windows(2) {
        assert!(w[0] > 5.0 * w[1], "{masses:?}");
    }
}

#[test]
fn supercritical_family_is_a_homogeneity_check() {
    let params = Params::new(4, 2.0, 0.0, 1.0).unwrap();
    let rep = end_to_end_strong(&params, Regime::Source, &make_grid(1e-6, 4096).unwrap(), 1e-6).unwrap();
    assert!(rep.branch.family_flag);
    for (lambda, mt) in &rep.summary.family_checks {
        assert!((mt - lambda).abs() <= 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_law_and_mass_homogeneity(p in 2.05f64..2.95, lambda in 0.1f64..10.0) {
        let params = Params::new(3, p, 0.0, 1.0).unwrap();
        let rep = strong_profile(&params, Regime::Absorption, &make_grid(1e-6, 2048).unwrap(), 1e-6).unwrap();
        prop_assert!(scaled_profile_residual(&rep, &params, lambda).unwrap() <= 1e-6);
        let factor = lambda.powf(-1.0 / (p - 1.0));
        let m = rep.grad_mass.unwrap();
        let scaled = gradient_mass(&rep.profile.scaled(factor), &params).unwrap().grad_mass;
        prop_assert!((scaled / (factor * m) - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn absorption_profile_matches_independent_integration() {
    // Fixed-step RK4 in r from r = 1 inward, seeded with u(1) = 0 and the
    // profile's own slope at r = 1.
    let params = Params::new(3, 2.0, 0.0, 1.0).unwrap();
    let g = make_grid(1e-6, 8192).unwrap();
    let rep = strong_profile(&params, Regime::Absorption, &g, 1e-6).unwrap();
    let u = &rep.profile;
    let du = u.radial_derivative();
    let f = |r: f64, y: [f64; 2]| [y[1], -2.0 / r * y[1] + y[0].max(0.0).powi(2)];
    let mut y = [0.0, *du.last().unwrap()];
    let mut r = 1.0;
    let steps = 200_000;
    let h = -(1.0 - 0.1) / steps as f64;
    for _ in 0..steps {
        let k1 = f(r, y);
        let k2 = f(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        r += h;
    }
    let i = g.nodes().iter().position(|x| *x >= 0.1).unwrap();
    let (ri, ui) = (g.nodes()[i], u.values()[i]);
    // First-order step onto the nearest grid node.
    let oracle = y[0] + (ri - 0.1) * y[1];
    assert!((oracle / ui - 1.0).abs() < 1e-5, "{oracle} vs {ui} at r = {ri}");
}
