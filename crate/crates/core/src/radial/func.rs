use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use super::quad;
use crate::error::{domain, KsError, Result};

const EXP_EQ: f64 = 1e-12;

/// Behaviour of a radial function as `r → 0⁺`, below the first grid node.
///
/// `Power { alpha }` means `u ~ coeff · r^alpha`, `Log` means
/// `u ~ coeff · (-ln r)` and `PowerLog` means `u ~ coeff · r^alpha |ln r|^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularTag {
    None,
    Power { alpha: f64 },
    Log,
    PowerLog { alpha: f64, log_power: f64 },
}

impl SingularTag {
    /// `(a, b)` with model `r^a |ln r|^b`, or `None` for a bounded function.
    pub fn exponents(&self) -> Option<(f64, f64)> {
        match *self {
            SingularTag::None => None,
            SingularTag::Power { alpha } => Some((alpha, 0.0)),
            SingularTag::Log => Some((0.0, 1.0)),
            SingularTag::PowerLog { alpha, log_power } => Some((alpha, log_power)),
        }
    }

    pub fn from_exponents(a: f64, b: f64) -> Self {
        if b.abs() < EXP_EQ {
            if a.abs() < EXP_EQ {
                SingularTag::None
            } else {
                SingularTag::Power { alpha: a }
            }
        } else if a.abs() < EXP_EQ && (b - 1.0).abs() < EXP_EQ {
            SingularTag::Log
        } else {
            SingularTag::PowerLog {
                alpha: a,
                log_power: b,
            }
        }
    }

    /// `self` dominates `other` near the origin.
    fn dominates(&self, other: &Self) -> bool {
        match (self.exponents(), other.exponents()) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some((a1, b1)), Some((a2, b2))) => {
                a1 < a2 - EXP_EQ || ((a1 - a2).abs() <= EXP_EQ && b1 > b2 + EXP_EQ)
            }
        }
    }

    fn same_as(&self, other: &Self) -> bool {
        match (self.exponents(), other.exponents()) {
            (None, None) => true,
            (Some((a1, b1)), Some((a2, b2))) => (a1 - a2).abs() <= EXP_EQ && (b1 - b2).abs() <= EXP_EQ,
            _ => false,
        }
    }
}

/// A radial function sampled on a [`RadialGrid`] together with a symbolic
/// model of its behaviour on `(0, r_min)`.
///
/// Integrals over `(0, r_min)` use `coeff · model(r) + offset`, where the
/// constant `offset` matches the model to the first sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFn {
    grid: RadialGrid,
    values: Vec<f64>,
    singular_tag: SingularTag,
    singular_coeff: f64,
}

impl RadialFn {
    pub fn new(grid: RadialGrid, values: Vec<f64>, tag: SingularTag, coeff: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!(
                "{} values supplied for a grid of {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("radial function has non-finite samples");
        }
        let coeff = if tag == SingularTag::None { 0.0 } else { coeff };
        Ok(Self {
            grid,
            values,
            singular_tag: tag,
            singular_coeff: coeff,
        })
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64, tag: SingularTag, coeff: f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), values, tag, coeff)
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            singular_tag: SingularTag::None,
            singular_coeff: 0.0,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn tag(&self) -> SingularTag {
        self.singular_tag
    }

    pub fn coeff(&self) -> f64 {
        self.singular_coeff
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_tag(mut self, tag: SingularTag, coeff: f64) -> Self {
        self.singular_tag = tag;
        self.singular_coeff = if tag == SingularTag::None { 0.0 } else { coeff };
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Singular model `coeff · r^a |ln r|^b` (zero when bounded).
    pub fn model(&self, r: f64) -> f64 {
        match self.singular_tag.exponents() {
            None => 0.0,
            Some((a, b)) => {
                let mut v = self.singular_coeff * r.powf(a);
                if b != 0.0 {
                    v *= (-r.ln()).powf(b);
                }
                v
            }
        }
    }

    fn offset(&self) -> f64 {
        self.values[0] - self.model(self.grid.r_min())
    }

    /// `∫_0^{r_min} u(r) r^e dr` from the singular model.
    pub fn tail_moment(&self, e: f64) -> Result<f64> {
        let rho = self.grid.r_min();
        let mut acc = 0.0;
        if let Some((a, b)) = self.singular_tag.exponents() {
            if self.singular_coeff != 0.0 {
                acc += self.singular_coeff * quad::power_log_tail(rho, a + e, b)?;
            }
        }
        if e <= -1.0 {
            let off = self.offset();
            if off.abs() > 1e-14 * self.values[0].abs().max(1.0) {
                return Err(KsError::Divergence(format!("∫_0 r^{e} dr diverges at the origin")));
            }
            return Ok(acc);
        }
        acc += self.offset() * rho.powf(e + 1.0) / (e + 1.0);
        Ok(acc)
    }

    /// `∫_0^1 u(r) r^e dr`: grid quadrature on `[r_min, 1]` plus the tail.
    pub fn moment(&self, e: f64) -> Result<f64> {
        let integrand: Vec<f64> = self
            .values
            .iter()
            .zip(self.grid.log_nodes())
            .map(|(u, t)| u * ((e + 1.0) * t).exp())
            .collect();
        Ok(self.tail_moment(e)? + quad::integrate(&integrand, self.grid.log_step()))
    }

    /// `∫_0^1 |u(r)| r^e dr`; the tail keeps the sign of the first sample.
    pub fn abs_moment(&self, e: f64) -> Result<f64> {
        let integrand: Vec<f64> = self
            .values
            .iter()
            .zip(self.grid.log_nodes())
            .map(|(u, t)| u.abs() * ((e + 1.0) * t).exp())
            .collect();
        Ok(self.tail_moment(e)?.abs() + quad::integrate(&integrand, self.grid.log_step()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            singular_tag: self.singular_tag,
            singular_coeff: c * self.singular_coeff,
        }
    }

    /// `a·self + b·other`; the more singular tag wins.
    pub fn combine(&self, a: f64, other: &RadialFn, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return domain("radial functions live on different grids");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let (tag, coeff) = if self.singular_tag.same_as(&other.singular_tag) {
            (self.singular_tag, a * self.singular_coeff + b * other.singular_coeff)
        } else if other.singular_tag.dominates(&self.singular_tag) {
            (other.singular_tag, b * other.singular_coeff)
        } else {
            (self.singular_tag, a * self.singular_coeff)
        };
        Self::new(self.grid.clone(), values, tag, coeff)
    }

    pub fn add(&self, other: &RadialFn) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    /// `max(u, 0)^p` with the power of the singular model.
    pub fn pow(&self, p: f64) -> Self {
        let values = self.values.iter().map(|v| v.max(0.0).powf(p)).collect();
        let (tag, coeff) = match self.singular_tag.exponents() {
            None => (SingularTag::None, 0.0),
            Some((a, b)) => (
                SingularTag::from_exponents(a * p, b * p),
                self.singular_coeff.max(0.0).powf(p),
            ),
        };
        Self {
            grid: self.grid.clone(),
            values,
            singular_tag: tag,
            singular_coeff: coeff,
        }
    }

    /// `du/dt` with `t = ln r` (fourth order).
    pub fn log_derivative(&self) -> Vec<f64> {
        quad::derivative(&self.values, self.grid.log_step())
    }

    /// `du/dr` at the nodes.
    pub fn radial_derivative(&self) -> Vec<f64> {
        self.log_derivative()
            .iter()
            .zip(self.grid.nodes())
            .map(|(d, r)| d / r)
            .collect()
    }

    /// Radial Laplacian `u'' + (N-1)u'/r` at the nodes.
    pub fn laplacian(&self, n: f64) -> Vec<f64> {
        let h = self.grid.log_step();
        let d1 = quad::derivative(&self.values, h);
        let d2 = quad::second_derivative(&self.values, h);
        self.grid
            .log_nodes()
            .iter()
            .enumerate()
            .map(|(i, t)| (-2.0 * t).exp() * (d2[i] + (n - 2.0) * d1[i]))
            .collect()
    }

    /// Least-squares fit `u ≈ A·basis(r) + B` over nodes with `r <= r_cut`; returns `A`.
    pub fn fit_against(&self, basis: impl Fn(f64) -> f64, r_cut: f64) -> f64 {
        let idx = self.grid.inner_indices(r_cut);
        let xs: Vec<f64> = idx.clone().map(|i| basis(self.grid.nodes()[i])).collect();
        let ys: Vec<f64> = idx.map(|i| self.values[i]).collect();
        linear_fit(&xs, &ys).0
    }

    /// Least-squares `ln u ≈ s·ln r + ln C` over `r <= r_cut`; returns `(s, C)`.
    pub fn log_log_fit(&self, r_cut: f64) -> (f64, f64) {
        let idx = self.grid.inner_indices(r_cut);
        let xs: Vec<f64> = idx.clone().map(|i| self.grid.log_nodes()[i]).collect();
        let ys: Vec<f64> = idx.map(|i| self.values[i].abs().ln()).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        (slope, intercept.exp())
    }
}

/// Ordinary least squares `y ≈ a x + b`, returns `(a, b)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// `∫_{B_1} |u| dx = σ_N ∫_0^1 |u(r)| r^{N-1} dr`.
pub fn l1_norm(u: &RadialFn, n: u32) -> Result<f64> {
    if n < 2 {
        return domain(format!("dimension N = {n} must be at least 2"));
    }
    let nf = n as f64;
    if let Some((a, _)) = u.tag().exponents() {
        if a <= -nf && u.coeff() != 0.0 {
            return Err(KsError::Divergence(format!(
                "r^{a} is not integrable against r^{} dr",
                nf - 1.0
            )));
        }
    }
    Ok(super::params::unit_sphere_area(n) * u.abs_moment(nf - 1.0)?)
}
