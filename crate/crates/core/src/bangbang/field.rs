use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{structural, Result};
use crate::linalg::Point2;
use crate::model::Grid;

pub type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(Point2) -> Point2 + Send + Sync>;

/// The adjoint φ̄ on a grid: node values, node gradients, and optional closed forms.
///
/// In 1D points are `[ξ, 0.0]` and gradients `[φ̄′, 0.0]`.
#[derive(Clone)]
pub struct AdjointField {
    grid: Grid,
    values: Vec<f64>,
    gradients: Vec<Point2>,
    analytic: Option<(ScalarFn, GradientFn)>,
}

impl fmt::Debug for AdjointField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdjointField")
            .field("grid", &self.grid)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl AdjointField {
    pub fn analytic(
        grid: Grid,
        value: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Point2) -> Point2 + Send + Sync + 'static,
    ) -> Result<Self> {
        let value: ScalarFn = Arc::new(value);
        let gradient: GradientFn = Arc::new(gradient);
        let nodes = grid.nodes();
        let values: Vec<f64> = nodes.par_iter().map(|p| value(*p)).collect();
        let gradients: Vec<Point2> = nodes.par_iter().map(|p| gradient(*p)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(structural("adjoint has non-finite node values"));
        }
        Ok(Self { grid, values, gradients, analytic: Some((value, gradient)) })
    }

    /// Node values only; gradients by central differences (one-sided at the boundary).
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(structural(format!(
                "adjoint has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(structural("adjoint has non-finite node values"));
        }
        let n = grid.cells_per_axis();
        let diff = |get: &dyn Fn(usize) -> f64, i: usize, h: f64| -> f64 {
            if n == 1 {
                0.0
            } else if i == 0 {
                (get(1) - get(0)) / h
            } else if i == n - 1 {
                (get(n - 1) - get(n - 2)) / h
            } else {
                (get(i + 1) - get(i - 1)) / (2.0 * h)
            }
        };
        let gradients: Vec<Point2> = match grid.dim() {
            1 => {
                let h = grid.spacing(0);
                (0..n).map(|i| [diff(&|k| values[k], i, h), 0.0]).collect()
            }
            _ => {
                let (hx, hy) = (grid.spacing(0), grid.spacing(1));
                (0..n * n)
                    .map(|idx| {
                        let (i, j) = (idx % n, idx / n);
                        [diff(&|k| values[k + n * j], i, hx), diff(&|k| values[i + n * k], j, hy)]
                    })
                    .collect()
            }
        };
        Ok(Self { grid, values, gradients, analytic: None })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradients(&self) -> &[Point2] {
        &self.gradients
    }

    pub fn has_closed_form(&self) -> bool {
        self.analytic.is_some()
    }

    /// φ̄ at an arbitrary point: closed form, else linear/bilinear interpolation of the
    /// node values (extrapolated into the half-cell boundary margin).
    pub fn value_at(&self, p: Point2) -> f64 {
        match &self.analytic {
            Some((f, _)) => f(p),
            None => self.interpolate(p, &|k| self.values[k]),
        }
    }

    pub fn gradient_at(&self, p: Point2) -> Point2 {
        match &self.analytic {
            Some((_, g)) => g(p),
            None => [
                self.interpolate(p, &|k| self.gradients[k][0]),
                self.interpolate(p, &|k| self.gradients[k][1]),
            ],
        }
    }

    /// Interpolates node data `get` at `p` on the lattice of cell centres.
    pub(crate) fn interpolate(&self, p: Point2, get: &dyn Fn(usize) -> f64) -> f64 {
        let n = self.grid.cells_per_axis();
        let locate = |axis: usize| -> (usize, f64) {
            let h = self.grid.spacing(axis);
            let s = (p[axis] - self.grid.lower()[axis]) / h - 0.5;
            if n == 1 {
                return (0, 0.0);
            }
            let i = (s.floor().max(0.0) as usize).min(n - 2);
            (i, s - i as f64)
        };
        match self.grid.dim() {
            1 => {
                if n == 1 {
                    return get(0);
                }
                let (i, a) = locate(0);
                (1.0 - a) * get(i) + a * get(i + 1)
            }
            _ => {
                if n == 1 {
                    return get(0);
                }
                let (i, a) = locate(0);
                let (j, b) = locate(1);
                let v00 = get(i + n * j);
                let v10 = get(i + 1 + n * j);
                let v01 = get(i + n * (j + 1));
                let v11 = get(i + 1 + n * (j + 1));
                (1.0 - a) * (1.0 - b) * v00 + a * (1.0 - b) * v10 + (1.0 - a) * b * v01 + a * b * v11
            }
        }
    }

    /// The bang-bang control x̄ = −sign φ̄ at the nodes (0 where φ̄ vanishes exactly).
    pub fn control(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| {
                if *v > 0.0 {
                    -1.0
                } else if *v < 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Linear model of φ̄ on a cell: (value at the centre, gradient).
    pub(crate) fn cell_model(&self, idx: usize) -> (f64, Point2) {
        (self.values[idx], self.gradients[idx])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_differences_are_exact_for_linear_data() {
        let grid = Grid::rectangle([0.0, 0.0], [1.0, 2.0], 8).unwrap();
        let values: Vec<f64> = grid.nodes().iter().map(|p| 3.0 * p[0] - 0.5 * p[1]).collect();
        let f = AdjointField::from_values(grid, values).unwrap();
        for g in f.gradients() {
            assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] + 0.5).abs() < 1e-12);
        }
        assert!((f.value_at([0.33, 1.21]) - (0.99 - 0.605)).abs() < 1e-12);
    }

    #[test]
    fn control_is_minus_sign() {
        let grid = Grid::interval(0.0, 1.0, 4).unwrap();
        let f = AdjointField::analytic(grid, |p| p[0] - 0.5, |_| [1.0, 0.0]).unwrap();
        assert_eq!(f.control(), vec![1.0, 1.0, -1.0, -1.0]);
    }
}
