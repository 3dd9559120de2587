//! Acceptance criteria. One PASS/FAIL line per criterion; exits nonzero if
//! any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ks_core::constants::{
    bootstrap_ledger, check_condition, compute_ap, singularity_coeff, tangency_map, CoeffRegime,
};
use ks_core::green::{dirac_potential, potential_pair};
use ks_core::mass::gradient_mass;
use ks_core::measure::{absorption_solve, negative_branch_solve, weak_singularity_solve};
use ks_core::radial::{DEFAULT_NODES, DEFAULT_R_MIN};
use ks_core::strong::{
    end_to_end_strong, scalar_branch, scaled_profile_residual, strong_profile, Branch, Regime,
};
use ks_core::{make_grid, KsError, Params, RadialGrid};

const FIT_TOL: f64 = 0.02;
const EXPONENT_TOL: f64 = 0.02;
const ITER_TOL: f64 = 1e-6;
const ROOT_TOL: f64 = 1e-8;
const GRID_CHANGE: f64 = 5e-3;

type Outcome = Result<String, String>;

fn grid(nodes: usize) -> RadialGrid {
    make_grid(DEFAULT_R_MIN, nodes).unwrap()
}

fn params(n: u32, p: f64, theta: f64, k: f64) -> Params {
    Params::new(n, p, theta, k).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_time(out: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    match out {
        Ok(m) if elapsed > limit => Err(format!("{m}; runtime {elapsed:?} exceeds {limit:?}")),
        other => other,
    }
}

fn ap_values(nodes: usize) -> Result<(f64, f64), KsError> {
    let g = grid(nodes);
    Ok((compute_ap(&params(3, 2.0, 0.0, 1.0), &g)?, compute_ap(&params(2, 2.0, 0.0, 1.0), &g)?))
}

fn criterion_1() -> Outcome {
    let (a3, a2) = ap_values(DEFAULT_NODES).map_err(|e| e.to_string())?;
    let (e3, e2) = (rel(a3, 1.0 / (12.0 * PI)), rel(a2, 1.0 / (8.0 * PI)));
    check(
        e3 <= 1e-4 && e2 <= 1e-4 && a3 < 0.25 && a2 < 0.25,
        format!("a_2(N=3) = {a3:.12} (rel err {e3:.1e}), a_2(N=2) = {a2:.12} (rel err {e2:.1e})"),
    )
}

fn dirac_masses(nodes: usize) -> Result<(f64, f64), KsError> {
    let g = grid(nodes);
    let m = |n| {
        let pr = params(n, 2.0, 0.0, 1.0);
        gradient_mass(&dirac_potential(&pr, &g), &pr).map(|r| r.grad_mass)
    };
    Ok((m(2)?, m(3)?))
}

fn criterion_2() -> Outcome {
    let (m2, m3) = dirac_masses(DEFAULT_NODES).map_err(|e| e.to_string())?;
    check(
        (m2 - 1.0).abs() <= 1e-6 && (m3 - 1.0).abs() <= 1e-6,
        format!("mass(w0) N=2: {m2:.12}, N=3: {m3:.12}"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst_tangent: f64 = 0.0;
    for p in [1.2_f64, 1.5, 2.0, 3.0, 5.0] {
        let s = (p / (p - 1.0)).powf(p);
        worst_tangent = worst_tangent.max((tangency_map(p, s) - s).abs() / s);
    }
    let g = grid(DEFAULT_NODES);
    let mut violations = 0;
    for (n, p) in [(3, 1.5), (3, 2.0), (2, 2.0), (2, 3.0)] {
        let pr = params(n, p, 0.0, 1.0);
        let pair = potential_pair(&pr, &g).map_err(|e| e.to_string())?;
        let a = compute_ap(&pr, &g).map_err(|e| e.to_string())?;
        violations += pair
            .w1
            .values()
            .iter()
            .zip(pair.w0.values())
            .filter(|(w1, w0)| **w1 > a * **w0 * (1.0 + 1e-12))
            .count();
    }
    check(
        worst_tangent <= 1e-12 && violations == 0,
        format!("max |f(s_p) - s_p|/s_p = {worst_tangent:.1e}; nodes with w1 > a_p w0: {violations}"),
    )
}

struct WeakValues {
    m_theta: f64,
    coeff: f64,
}

fn weak_run(nodes: usize) -> Result<(WeakValues, Outcome), KsError> {
    let pr = params(3, 2.0, 1.0, 1.0);
    let g = grid(nodes);
    let cond = check_condition(&pr, compute_ap(&pr, &g)?)?;
    let rep = weak_singularity_solve(&pr, &g, ITER_TOL, 500)?;
    let target = pr.c_n() * pr.k();
    let err = rel(rep.singular_coeff_measured, target);
    let out = check(
        cond.admissible
            && rep.fixed_point_residual <= ITER_TOL
            && rep.barrier_ok
            && rep.m_theta >= pr.theta() + pr.k()
            && rep.weak_residual <= 1e-4
            && err <= FIT_TOL,
        format!(
            "admissible {}, residual {:.1e} after {} iterations, barrier {}, M = {:.9}, weak residual {:.1e}, u/Phi rel err {:.1e}",
            cond.admissible, rep.fixed_point_residual, rep.iterations, rep.barrier_ok, rep.m_theta, rep.weak_residual, err
        ),
    );
    Ok((WeakValues { m_theta: rep.m_theta, coeff: rep.singular_coeff_measured }, out))
}

fn criterion_4() -> Outcome {
    weak_run(DEFAULT_NODES).map_err(|e| e.to_string())?.1
}

fn criterion_5() -> Outcome {
    let pr = params(3, 1.5, 0.0, 1.0);
    let g = grid(DEFAULT_NODES);
    let limit = Duration::from_secs(10);
    let mut slowest = Duration::ZERO;
    let mut solve = |lambda: f64| {
        let t = Instant::now();
        let r = absorption_solve(&pr, lambda, &g, ITER_TOL);
        slowest = slowest.max(t.elapsed());
        r.map_err(|e| e.to_string())
    };
    let u0 = solve(0.0)?;
    let half = solve(0.5)?;
    let one = solve(1.0)?;
    let w0 = dirac_potential(&pr, &g);
    let exact = u0.profile.values().iter().zip(w0.values()).all(|(u, w)| *u == pr.k() * w);
    let monotone = half.profile.values().iter().zip(one.profile.values()).all(|(a, b)| a >= b);
    let target = pr.c_n() * pr.k();
    let err = rel(one.singular_coeff_measured, target);
    let out = check(
        exact && monotone && one.barrier_ok && half.barrier_ok && err <= FIT_TOL,
        format!(
            "lambda=0 exact {exact}, u_0.5 >= u_1 {monotone}, sandwich {}, coeff rel err {err:.1e}, slowest solve {slowest:?}",
            one.barrier_ok && half.barrier_ok
        ),
    );
    within_time(out, slowest, limit)
}

fn criterion_6() -> Outcome {
    let pr = params(3, 1.5, -2.0, 1.0);
    let rep = negative_branch_solve(&pr, &grid(DEFAULT_NODES), ROOT_TOL).map_err(|e| e.to_string())?;
    let m = rep.m_theta_at_root;
    check(
        rep.bracket_sign_change
            && rep.f_at_root.abs() <= ROOT_TOL
            && m > pr.theta()
            && m < pr.k() + pr.theta()
            && rep.continuity_modulus_check <= ROOT_TOL,
        format!(
            "lambda_1 = {:.9}, lambda_2 = {:.9} (lambda_2 < lambda_1: {}), root {:.12}, |F| = {:.1e}, M = {m:.9}, modulus check {:.3e}",
            rep.lambda_1, rep.lambda_2, rep.lambda_2_below_lambda_1, rep.root, rep.f_at_root.abs(), rep.continuity_modulus_check
        ),
    )
}

struct StrongValues {
    exponent: f64,
    coeff: f64,
}

fn strong_case(pr: &Params, regime: Regime, coeff: CoeffRegime, nodes: usize) -> Result<(StrongValues, Outcome), String> {
    let t = Instant::now();
    let rep = strong_profile(pr, regime, &grid(nodes), ITER_TOL).map_err(|e| e.to_string())?;
    let c_p = singularity_coeff(pr, coeff).map_err(|e| e.to_string())?;
    let alpha = 2.0 / (pr.p() - 1.0);
    let e_err = (rep.exponent_fit + alpha).abs();
    let c_err = rel(rep.coeff_fit, c_p);
    let scaling = [0.5, 4.0]
        .iter()
        .map(|l| scaled_profile_residual(&rep, pr, *l).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let worst = scaling.iter().fold(0.0_f64, |m, r| m.max(*r));
    let out = check(
        e_err <= EXPONENT_TOL && c_err <= FIT_TOL && worst <= ITER_TOL,
        format!(
            "exponent {:.5} (err {e_err:.1e}), coeff {:.6} vs c_p {c_p:.6} (rel err {c_err:.1e}), scaling residual {worst:.1e}",
            rep.exponent_fit, rep.coeff_fit
        ),
    );
    let out = within_time(out, t.elapsed(), Duration::from_secs(30));
    Ok((StrongValues { exponent: rep.exponent_fit, coeff: rep.coeff_fit }, out))
}

fn criterion_7() -> Outcome {
    let abs = strong_case(&params(3, 2.0, 0.0, 1.0), Regime::Absorption, CoeffRegime::AbsorptionSubcritical, DEFAULT_NODES)
        .map(|(_, o)| o)
        .unwrap_or_else(Err);
    let src = strong_case(&params(3, 5.0, 0.0, 1.0), Regime::Source, CoeffRegime::SourceSupercritical, DEFAULT_NODES)
        .map(|(_, o)| o)
        .unwrap_or_else(Err);
    let line = |o: &Outcome| match o {
        Ok(m) => format!("ok: {m}"),
        Err(m) => format!("FAILED: {m}"),
    };
    let msg = format!("absorption N=3 p=2 {}; source N=3 p=5 {}", line(&abs), line(&src));
    check(abs.is_ok() && src.is_ok(), msg)
}

fn criterion_8() -> Outcome {
    let r = scalar_branch(&params(3, 3.0, 0.0, 1.0), 2.0, Branch::SupercriticalSource).map_err(|e| e.to_string())?;
    let lambda_bar = r.lambda_bar.unwrap_or(f64::NAN);
    let fam = end_to_end_strong(&params(4, 2.0, 0.0, 1.0), Regime::Source, &grid(DEFAULT_NODES), ITER_TOL)
        .map_err(|e| e.to_string())?;
    let worst = fam
        .summary
        .family_checks
        .iter()
        .fold(0.0_f64, |m, (l, mt)| m.max((mt - l).abs()));
    check(
        (lambda_bar - 4.0).abs() <= 1e-10 && fam.branch.family_flag && fam.summary.family_checks.len() == 2 && worst <= 1e-3,
        format!(
            "lambda_bar(p=3, m=2) = {lambda_bar:.15}; family flag {}, max |M(lambda v) - lambda| = {worst:.1e}",
            fam.branch.family_flag
        ),
    )
}

fn criterion_9() -> Outcome {
    let a = bootstrap_ledger(&params(3, 2.0, 0.0, 1.0)).map_err(|e| e.to_string())?;
    let b = bootstrap_ledger(&params(3, 2.5, 0.0, 1.0)).map_err(|e| e.to_string())?;
    let close = |x: &[f64], y: &[f64]| x.len() == y.len() && x.iter().zip(y).all(|(u, v)| (u - v).abs() <= 1e-12);
    check(
        close(&a.t_seq, &[1.25, 3.75]) && a.m0 == Some(1) && close(&b.mu_seq, &[-0.5, 0.75]),
        format!("t_seq {:?}, m0 {:?}; mu_seq {:?}", a.t_seq, a.m0, b.mu_seq),
    )
}

fn criterion_10() -> Outcome {
    let coarse = DEFAULT_NODES;
    let fine = 2 * DEFAULT_NODES;
    let mut changes: Vec<(String, f64)> = Vec::new();
    let mut missing = Vec::new();

    let e = |x: KsError| x.to_string();
    let (a3, a2) = ap_values(coarse).map_err(e)?;
    let (b3, b2) = ap_values(fine).map_err(e)?;
    changes.push(("a_p N=3".into(), rel(b3, a3)));
    changes.push(("a_p N=2".into(), rel(b2, a2)));
    let (m2, m3) = dirac_masses(coarse).map_err(e)?;
    let (n2, n3) = dirac_masses(fine).map_err(e)?;
    changes.push(("mass N=2".into(), rel(n2, m2)));
    changes.push(("mass N=3".into(), rel(n3, m3)));
    let (w, _) = weak_run(coarse).map_err(e)?;
    let (v, _) = weak_run(fine).map_err(e)?;
    changes.push(("weak M".into(), rel(v.m_theta, w.m_theta)));
    changes.push(("weak coeff".into(), rel(v.coeff, w.coeff)));
    for (label, pr, regime, coeff) in [
        ("absorption", params(3, 2.0, 0.0, 1.0), Regime::Absorption, CoeffRegime::AbsorptionSubcritical),
        ("source p=5", params(3, 5.0, 0.0, 1.0), Regime::Source, CoeffRegime::SourceSupercritical),
    ] {
        match (strong_case(&pr, regime, coeff, coarse), strong_case(&pr, regime, coeff, fine)) {
            (Ok((x, _)), Ok((y, _))) => {
                changes.push((format!("{label} exponent"), rel(y.exponent, x.exponent)));
                changes.push((format!("{label} coeff"), rel(y.coeff, x.coeff)));
            }
            (Err(m), _) | (_, Err(m)) => missing.push(format!("{label}: {m}")),
        }
    }
    let worst = changes.iter().fold(("".to_string(), 0.0_f64), |acc, (l, c)| if *c > acc.1 { (l.clone(), *c) } else { acc });
    let mut msg = format!("{} values compared, largest change {:.1e} ({})", changes.len(), worst.1, worst.0);
    if !missing.is_empty() {
        msg.push_str(&format!("; not computable: {}", missing.join("; ")));
    }
    check(worst.1 < GRID_CHANGE && missing.is_empty(), msg)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 10] = [
        ("closed-form constants", criterion_1, Some(Duration::from_secs(1))),
        ("gradient-mass normalization", criterion_2, Some(Duration::from_millis(100))),
        ("barrier and tangency identities", criterion_3, None),
        ("weak-singularity construction", criterion_4, Some(Duration::from_secs(10))),
        ("absorption solver", criterion_5, None),
        ("negative branch", criterion_6, Some(Duration::from_secs(60))),
        ("strong profiles", criterion_7, None),
        ("scalar branch algebra", criterion_8, Some(Duration::from_secs(30))),
        ("bootstrap ledgers", criterion_9, Some(Duration::from_millis(10))),
        ("grid convergence", criterion_10, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            out = within_time(out, elapsed, *limit);
        }
        let (tag, msg) = match out {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} {:>2} {name}: {msg} [{:.3} s]", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
