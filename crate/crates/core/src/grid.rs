//! Rectangular time lattices on `[0, s_max] × [0, t_max]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform rectangular grid: `n_s × n_t` cells, nodes at
/// `(i·Δs, j·Δt)` for `0 ≤ i ≤ n_s`, `0 ≤ j ≤ n_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    s_max: f64,
    t_max: f64,
    n_s: usize,
    n_t: usize,
}

impl GridSpec {
    /// Builds a grid, rejecting non-positive extents or zero cell counts.
    pub fn new(s_max: f64, t_max: f64, n_s: usize, n_t: usize) -> Result<Self> {
        if !(s_max > 0.0) || !(t_max > 0.0) {
            return Err(Error::Config(format!(
                "grid extents must be positive (got s_max={s_max}, t_max={t_max})"
            )));
        }
        if n_s == 0 || n_t == 0 {
            return Err(Error::Config(format!(
                "grid needs at least one cell per axis (got n_s={n_s}, n_t={n_t})"
            )));
        }
        Ok(GridSpec { s_max, t_max, n_s, n_t })
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }
    pub fn t_max(&self) -> f64 {
        self.t_max
    }
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// Cell width along the s-axis.
    pub fn ds(&self) -> f64 {
        self.s_max / self.n_s as f64
    }

    /// Cell width along the t-axis.
    pub fn dt(&self) -> f64 {
        self.t_max / self.n_t as f64
    }

    /// Area `Δs·Δt` of one cell.
    pub fn cell_area(&self) -> f64 {
        self.ds() * self.dt()
    }

    pub fn cell_count(&self) -> usize {
        self.n_s * self.n_t
    }

    /// Time coordinates of node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.ds(), j as f64 * self.dt())
    }

    /// Errors unless `(i, j)` is a node of this grid.
    pub fn check_node(&self, i: usize, j: usize) -> Result<()> {
        if i > self.n_s || j > self.n_t {
            Err(Error::IndexOutOfRange { i, j, n_s: self.n_s, n_t: self.n_t })
        } else {
            Ok(())
        }
    }

    /// Nearest node to a requested time point, clamped into the grid.
    /// Returns the node indices together with the snapped coordinates.
    pub fn snap(&self, s: f64, t: f64) -> (usize, usize, f64, f64) {
        let i = ((s / self.ds()).round().max(0.0) as usize).min(self.n_s);
        let j = ((t / self.dt()).round().max(0.0) as usize).min(self.n_t);
        let (ss, tt) = self.node(i, j);
        (i, j, ss, tt)
    }
}
