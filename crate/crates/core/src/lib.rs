//! Radial construction and verification of isolated singular solutions of
//! the Kirchhoff-type problem `-M_θ(u) Δu = u^p` on the punctured unit ball,
//! where `M_θ(u) = θ + ∫|∇u| dx`.
//!
//! The crate is organised bottom-up:
//!
//! * [`radial`]: geometric grids, sampled radial functions with a symbolic
//!   singular part, quadrature in `t = ln r`.
//! * [`green`]: the Green operator of `-Δ` on `B_1` and the potentials
//!   `w₀ = G[δ₀]`, `w₁ = G[w₀^p]`.
//! * [`mass`]: the Kirchhoff functional and the distributional residual.
//! * [`constants`]: `a_p`, the admissibility condition, barrier scales,
//!   singularity coefficients and the bootstrap exponent ledgers.
//! * [`measure`]: solvers for Dirac-sourced problems (fixed point, absorption,
//!   negative Kirchhoff branch).
//! * [`strong`]: strongly singular profiles and their scalar branch equations.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod green;
pub mod mass;
pub mod measure;
pub mod radial;
pub mod roots;
pub mod strong;

pub use error::{KsError, Result};
pub use radial::{make_grid, Params, RadialFn, RadialGrid, SingularTag};
