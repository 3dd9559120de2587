//! Uniform-step quadrature and difference stencils in the variable `t = ln r`.
//!
//! Cumulative integrals integrate the local cubic through four neighbouring
//! samples (composite trapezoid plus the fourth-order end correction), so
//! integrands that are smooth in `t` are integrated to `O(h^4)`.

use crate::error::{KsError, Result};

/// `out[i] = ∫_{t_0}^{t_i} f dt`, `out[0] = 0`.
pub fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        return out;
    }
    let c = h / 24.0;
    for i in 0..n - 1 {
        let seg = if i == 0 {
            c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            c * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + seg;
    }
    out
}

/// `out[i] = ∫_{t_i}^{t_{n-1}} f dt`; the last entry is exactly zero.
pub fn cumulative_from_right(f: &[f64], h: f64) -> Vec<f64> {
    let left = cumulative(f, h);
    let total = left.last().copied().unwrap_or(0.0);
    left.iter().map(|v| total - v).collect()
}

pub fn integrate(f: &[f64], h: f64) -> f64 {
    cumulative(f, h).last().copied().unwrap_or(0.0)
}

/// Fourth-order first derivative on a uniform grid (one-sided at the ends).
pub fn derivative(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let mut d = vec![0.0; n];
    if n < 5 {
        for i in 0..n {
            d[i] = match i {
                0 if n > 1 => (u[1] - u[0]) / h,
                i if i + 1 == n && n > 1 => (u[i] - u[i - 1]) / h,
                i if n > 2 => (u[i + 1] - u[i - 1]) / (2.0 * h),
                _ => 0.0,
            };
        }
        return d;
    }
    let c = 1.0 / (12.0 * h);
    d[0] = c * (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]);
    d[1] = c * (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]);
    for i in 2..n - 2 {
        d[i] = c * (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]);
    }
    let m = n - 1;
    d[m] = -c * (-25.0 * u[m] + 48.0 * u[m - 1] - 36.0 * u[m - 2] + 16.0 * u[m - 3] - 3.0 * u[m - 4]);
    d[m - 1] = -c * (-3.0 * u[m] - 10.0 * u[m - 1] + 18.0 * u[m - 2] - 6.0 * u[m - 3] + u[m - 4]);
    d
}

/// Fourth-order second derivative (one-sided six-point stencils at the ends).
pub fn second_derivative(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    if n < 6 {
        return derivative(&derivative(u, h), h);
    }
    let c = 1.0 / (12.0 * h * h);
    let mut d = vec![0.0; n];
    let one_sided = |v: [f64; 6]| {
        c * (45.0 * v[0] - 154.0 * v[1] + 214.0 * v[2] - 156.0 * v[3] + 61.0 * v[4] - 10.0 * v[5])
    };
    let near_end = |v: [f64; 6]| c * (10.0 * v[0] - 15.0 * v[1] - 4.0 * v[2] + 14.0 * v[3] - 6.0 * v[4] + v[5]);
    d[0] = one_sided([u[0], u[1], u[2], u[3], u[4], u[5]]);
    d[1] = near_end([u[0], u[1], u[2], u[3], u[4], u[5]]);
    for i in 2..n - 2 {
        d[i] = c * (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]);
    }
    let m = n - 1;
    d[m] = one_sided([u[m], u[m - 1], u[m - 2], u[m - 3], u[m - 4], u[m - 5]]);
    d[m - 1] = near_end([u[m], u[m - 1], u[m - 2], u[m - 3], u[m - 4], u[m - 5]]);
    d
}

/// `∫_0^ρ r^e |ln r|^b dr` for `0 < ρ < 1`.
pub fn power_log_tail(rho: f64, e: f64, b: f64) -> Result<f64> {
    let lambda = e + 1.0;
    if b == 0.0 {
        if lambda <= 0.0 {
            return Err(KsError::Divergence(format!(
                "∫_0 r^{e} dr diverges at the origin"
            )));
        }
        return Ok(rho.powf(lambda) / lambda);
    }
    if lambda <= 0.0 {
        return Err(KsError::Divergence(format!(
            "∫_0 r^{e} |ln r|^{b} dr diverges at the origin"
        )));
    }
    // r = e^{-x}: ∫_X^∞ e^{-λx} x^b dx = e^{-λX} ∫_0^∞ e^{-λy} (X + y)^b dy.
    let x0 = -rho.ln();
    let y_max = 60.0 / lambda;
    let intervals = 16_000;
    let dy = y_max / intervals as f64;
    let g = |y: f64| (-lambda * y).exp() * (x0 + y).powf(b);
    let mut acc = g(0.0) + g(y_max);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * dy);
    }
    Ok((-lambda * x0).exp() * acc * dy / 3.0)
}
