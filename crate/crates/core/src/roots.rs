//! Scalar bracketing root finders shared by the branch solvers.

/// Outcome of a bracketed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]`, which must carry a sign change of `f`.
///
/// Stops when `|f(mid)| <= f_tol`, when the bracket is narrower than `x_tol`,
/// or after `max_iter` halvings. Returns `None` when the endpoints have the
/// same strict sign.
pub fn bisect<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<Option<Root>, E> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(Some(Root { x: a, fx: fa, iterations: 0 }));
    }
    let fb = f(b)?;
    if fb == 0.0 {
        return Ok(Some(Root { x: b, fx: fb, iterations: 0 }));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    let mut best = if fa.abs() < fb.abs() { Root { x: a, fx: fa, iterations: 0 } } else { Root { x: b, fx: fb, iterations: 0 } };
    for it in 1..=max_iter {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() <= best.fx.abs() {
            best = Root { x: m, fx: fm, iterations: it };
        }
        best.iterations = it;
        if fm.abs() <= f_tol || (b - a) <= x_tol || m == a || m == b {
            return Ok(Some(Root { x: m, fx: fm, iterations: it }));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(Some(best))
}

/// Infallible wrapper around [`bisect`].
pub fn bisect_plain(f: impl Fn(f64) -> f64, lo: f64, hi: f64, x_tol: f64, f_tol: f64, max_iter: usize) -> Option<Root> {
    bisect::<std::convert::Infallible>(|x| Ok(f(x)), lo, hi, x_tol, f_tol, max_iter).unwrap_or_else(|e| match e {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect_plain(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0, 200).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn reports_missing_bracket() {
        assert!(bisect_plain(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0, 100).is_none());
    }

    #[test]
    fn propagates_errors() {
        let out: Result<Option<Root>, &str> = bisect(|x| if x > 0.5 { Err("boom") } else { Ok(x - 0.7) }, 0.0, 1.0, 1e-9, 0.0, 50);
        assert_eq!(out, Err("boom"));
    }
}
