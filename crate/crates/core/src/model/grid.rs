use std::sync::Arc;

use crate::error::{structural, Result};
use crate::model::Norm;

/// Uniform tensor grid on an interval or an axis-aligned box.
///
/// Nodes are cell centres, so every node lies strictly inside the open domain.
/// In 2D nodes are ordered with the first axis running fastest: `idx = i + nx * j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    cells: usize,
    volumes: Arc<[f64]>,
}

impl Grid {
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::build(1, [a, 0.0], [b, 1.0], cells)
    }

    pub fn rectangle(lower: [f64; 2], upper: [f64; 2], cells_per_axis: usize) -> Result<Self> {
        Self::build(2, lower, upper, cells_per_axis)
    }

    fn build(dim: usize, lower: [f64; 2], upper: [f64; 2], cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(structural("grid needs at least one cell per axis"));
        }
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(structural(format!("empty or unbounded domain along axis {k}")));
            }
        }
        let mut g = Self {
            dim,
            lower,
            upper,
            cells,
            volumes: Arc::from(Vec::new()),
        };
        let vol = g.cell_volume();
        g.volumes = Arc::from(vec![vol; g.len()]);
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    /// Number of nodes (= number of cells).
    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        self.upper
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|k| self.spacing(k)).product()
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn domain_measure(&self) -> f64 {
        (0..self.dim).map(|k| self.upper[k] - self.lower[k]).product()
    }

    pub fn center_1d(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + (i as f64 + 0.5) * self.spacing(axis)
    }

    /// Coordinates of node `idx` (the second component is 0 in 1D).
    pub fn node(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.center_1d(0, idx), 0.0],
            _ => {
                let i = idx % self.cells;
                let j = idx / self.cells;
                [self.center_1d(0, i), self.center_1d(1, j)]
            }
        }
    }

    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Cell bounds `(lo, hi)` of node `idx`.
    pub fn cell_bounds(&self, idx: usize) -> ([f64; 2], [f64; 2]) {
        let c = self.node(idx);
        let hx = 0.5 * self.spacing(0);
        if self.dim == 1 {
            ([c[0] - hx, 0.0], [c[0] + hx, 0.0])
        } else {
            let hy = 0.5 * self.spacing(1);
            ([c[0] - hx, c[1] - hy], [c[0] + hx, c[1] + hy])
        }
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        (0..self.dim).all(|k| p[k] > self.lower[k] && p[k] < self.upper[k])
    }

    pub fn l1_norm(&self) -> Norm {
        Norm::WeightedL1(self.volumes.clone())
    }

    pub fn l2_norm(&self) -> Norm {
        Norm::WeightedL2(self.volumes.clone())
    }

    /// Weighted L² pairing ∫ a b.
    pub fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        self.cell_volume() * crate::linalg::dot(a, b)
    }

    /// Range of cell indices along `axis` whose cells intersect `[a, b]`.
    pub(crate) fn cell_range(&self, axis: usize, a: f64, b: f64) -> std::ops::Range<usize> {
        let h = self.spacing(axis);
        let lo = ((a - self.lower[axis]) / h).floor().max(0.0) as usize;
        let hi = (((b - self.lower[axis]) / h).ceil().max(0.0) as usize).min(self.cells);
        lo.min(self.cells)..hi
    }
}
