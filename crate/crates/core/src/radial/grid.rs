use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, KsError, Result};

/// Smallest node count accepted by [`make_grid`].
pub const MIN_NODES: usize = 16;
pub const DEFAULT_R_MIN: f64 = 1e-6;
pub const DEFAULT_NODES: usize = 4096;

/// Geometrically spaced nodes `r_min = r_0 < r_1 < ... < r_{n-1} = 1`.
///
/// In the logarithmic variable `t = ln r` the nodes are uniform with step
/// [`RadialGrid::log_step`], which is what every quadrature and difference
/// stencil in this crate works with. Cloning is cheap.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct RadialGrid {
    r_min: f64,
    log_step: f64,
    nodes: Arc<[f64]>,
    log_nodes: Arc<[f64]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub n_nodes: usize,
}

impl TryFrom<GridSpec> for RadialGrid {
    type Error = KsError;

    fn try_from(spec: GridSpec) -> Result<Self> {
        RadialGrid::geometric(spec.r_min, spec.n_nodes)
    }
}

impl From<RadialGrid> for GridSpec {
    fn from(g: RadialGrid) -> Self {
        g.spec()
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.r_min == other.r_min && self.nodes.len() == other.nodes.len()
    }
}

/// Builds the production grid; rejects fewer than [`MIN_NODES`] nodes.
pub fn make_grid(r_min: f64, n_nodes: usize) -> Result<RadialGrid> {
    if n_nodes < MIN_NODES {
        return domain(format!("n_nodes = {n_nodes} is below the minimum {MIN_NODES}"));
    }
    RadialGrid::geometric(r_min, n_nodes)
}

impl RadialGrid {
    /// Geometric grid with any `n_nodes >= 2`. Use [`make_grid`] for solves.
    pub fn geometric(r_min: f64, n_nodes: usize) -> Result<Self> {
        if !(r_min.is_finite() && r_min > 0.0 && r_min < 1.0) {
            return domain(format!("r_min = {r_min} must lie in (0, 1)"));
        }
        if n_nodes < 2 {
            return domain(format!("n_nodes = {n_nodes} must be at least 2"));
        }
        let t0 = r_min.ln();
        let last = (n_nodes - 1) as f64;
        let log_step = -t0 / last;
        let log_nodes: Vec<f64> = (0..n_nodes)
            .map(|i| {
                if i + 1 == n_nodes {
                    0.0
                } else {
                    t0 * (1.0 - i as f64 / last)
                }
            })
            .collect();
        let mut nodes: Vec<f64> = log_nodes.iter().map(|t| t.exp()).collect();
        nodes[0] = r_min;
        nodes[n_nodes - 1] = 1.0;
        Ok(Self {
            r_min,
            log_step,
            nodes: nodes.into(),
            log_nodes: log_nodes.into(),
        })
    }

    /// The same geometric grid with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let intervals = (self.len() - 1) * factor.max(1);
        Self::geometric(self.r_min, intervals + 1)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `ln r_i`, uniform with step [`Self::log_step`].
    pub fn log_nodes(&self) -> &[f64] {
        &self.log_nodes
    }

    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    /// Constant ratio `r_{i+1} / r_i`.
    pub fn ratio(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            r_min: self.r_min,
            n_nodes: self.len(),
        }
    }

    /// Node indices with `r <= r_cut`, always at least three.
    pub(crate) fn inner_indices(&self, r_cut: f64) -> std::ops::Range<usize> {
        let end = self.nodes.partition_point(|&r| r <= r_cut).max(3).min(self.len());
        0..end
    }
}
