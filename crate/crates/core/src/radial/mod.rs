//! Grids, sampled radial functions and the integrals every solver consumes.

mod func;
mod grid;
mod params;
pub mod quad;

pub use func::{l1_norm, RadialFn, SingularTag};
pub(crate) use func::linear_fit;
pub use grid::{make_grid, GridSpec, RadialGrid, DEFAULT_NODES, DEFAULT_R_MIN, MIN_NODES};
pub use params::{unit_sphere_area, Params, ParamsRecord};
