use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, KsError, Result};

/// Problem record: dimension, exponent, Kirchhoff offset and Dirac weight.
///
/// The domain is always the unit ball, so the derived constants are those of
/// `B_1(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRecord", into = "ParamsRecord")]
pub struct Params {
    n: u32,
    p: f64,
    theta: f64,
    k: f64,
    p_star: f64,
    sigma_n: f64,
    c_n: f64,
}

/// Serialized form. `p_star` is `null` for `N = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub theta: f64,
    pub k: f64,
    #[serde(default)]
    pub p_star: Option<f64>,
    #[serde(default)]
    pub theta_minus: Option<f64>,
    #[serde(default, rename = "sigma_N")]
    pub sigma_n: Option<f64>,
    #[serde(default, rename = "c_N")]
    pub c_n: Option<f64>,
}

impl TryFrom<ParamsRecord> for Params {
    type Error = KsError;

    fn try_from(rec: ParamsRecord) -> Result<Self> {
        Params::new(rec.n, rec.p, rec.theta, rec.k)
    }
}

impl From<Params> for ParamsRecord {
    fn from(p: Params) -> Self {
        ParamsRecord {
            n: p.n,
            p: p.p,
            theta: p.theta,
            k: p.k,
            p_star: p.p_star.is_finite().then_some(p.p_star),
            theta_minus: Some(p.theta_minus()),
            sigma_n: Some(p.sigma_n),
            c_n: Some(p.c_n),
        }
    }
}

impl Params {
    pub fn new(n: u32, p: f64, theta: f64, k: f64) -> Result<Self> {
        if n < 2 {
            return domain(format!("dimension N = {n} must be at least 2"));
        }
        if !(p.is_finite() && p > 1.0) {
            return domain(format!("exponent p = {p} must be a finite real > 1"));
        }
        if !theta.is_finite() {
            return domain("theta must be finite");
        }
        if !k.is_finite() {
            return domain("k must be finite");
        }
        let sigma_n = unit_sphere_area(n);
        let (p_star, c_n) = if n == 2 {
            (f64::INFINITY, 1.0 / sigma_n)
        } else {
            let nf = n as f64;
            (nf / (nf - 2.0), 1.0 / ((nf - 2.0) * sigma_n))
        };
        Ok(Self {
            n,
            p,
            theta,
            k,
            p_star,
            sigma_n,
            c_n,
        })
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.n, p, self.theta, self.k)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.n, self.p, theta, self.k)
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.n, self.p, self.theta, k)
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn dim_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `N/(N-2)`, or `+∞` for `N = 2`.
    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn theta_minus(&self) -> f64 {
        self.theta.min(0.0)
    }

    /// Surface measure of the unit sphere in `R^N`.
    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    /// Normalisation with `-Δ(c_N Φ) = δ_0`.
    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    /// Fundamental-solution profile `Φ(r)`: `r^{2-N}`, or `-ln r` in the plane.
    pub fn phi(&self, r: f64) -> f64 {
        if self.n == 2 {
            -r.ln()
        } else {
            r.powf(2.0 - self.dim_f64())
        }
    }

    pub fn is_subcritical(&self) -> bool {
        self.p < self.p_star
    }

    pub fn require_subcritical(&self) -> Result<()> {
        if self.is_subcritical() {
            Ok(())
        } else {
            Err(KsError::Supercritical {
                p: self.p,
                p_star: self.p_star,
            })
        }
    }

    /// Sobolev exponent `(N+2)/(N-2)`, `+∞` in the plane.
    pub fn sobolev_exponent(&self) -> f64 {
        if self.n == 2 {
            f64::INFINITY
        } else {
            let nf = self.dim_f64();
            (nf + 2.0) / (nf - 2.0)
        }
    }
}

/// `2 π^{N/2} / Γ(N/2)`, via the two-step recursion in `N`.
pub fn unit_sphere_area(n: u32) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => unit_sphere_area(n - 2) * 2.0 * PI / (n as f64 - 2.0),
    }
}
