use rayon::prelude::*;
use serde::Serialize;

use super::{AdjointField, SurfaceMeasure};
use crate::error::{structural, Error, Result};
use crate::linalg::{clip_to_rect, polygon_area, Point2, GAUSS5};

/// Sub-pieces per marching-squares segment; their base points are projected onto Z.
const SUBDIVISIONS: usize = 4;

/// A polygon (an interval `[a, b]` stored as `[[a,0],[b,0]]` in 1D) on which the strip
/// direction takes the constant value `value`.
#[derive(Debug, Clone, Serialize)]
pub struct StripPiece {
    pub polygon: Vec<Point2>,
    pub value: f64,
}

/// The recovery direction h_t = (2 sign g / t)·1_{G_t} for one step t.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryStrips {
    pub t: f64,
    pub dim: usize,
    pub pieces: Vec<StripPiece>,
    /// h_t on the grid: cell coverage times the piece value, limited so that x̄ + t h_t
    /// stays in [−1, 1].
    pub grid_values: Vec<f64>,
    /// Cells where the feasibility limit was applied.
    pub clamped_cells: usize,
}

fn piece_measure(dim: usize, poly: &[Point2]) -> f64 {
    if dim == 1 {
        (poly[1][0] - poly[0][0]).abs()
    } else {
        polygon_area(poly)
    }
}

/// ∫_piece f by Gauss–Legendre quadrature (tensor rule on the bilinear quad map in 2D).
fn piece_integral(dim: usize, poly: &[Point2], f: &dyn Fn(Point2) -> f64) -> f64 {
    if dim == 1 {
        let (a, b) = (poly[0][0], poly[1][0]);
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        return r.abs() * GAUSS5.iter().map(|(x, w)| w * f([m + r * x, 0.0])).sum::<f64>();
    }
    let p = poly;
    let mut total = 0.0;
    for (u, wu) in GAUSS5 {
        for (v, wv) in GAUSS5 {
            let n = [
                0.25 * (1.0 - u) * (1.0 - v),
                0.25 * (1.0 + u) * (1.0 - v),
                0.25 * (1.0 + u) * (1.0 + v),
                0.25 * (1.0 - u) * (1.0 + v),
            ];
            let du = [-0.25 * (1.0 - v), 0.25 * (1.0 - v), 0.25 * (1.0 + v), -0.25 * (1.0 + v)];
            let dv = [-0.25 * (1.0 - u), -0.25 * (1.0 + u), 0.25 * (1.0 + u), 0.25 * (1.0 - u)];
            let mut x = [0.0; 2];
            let mut xu = [0.0; 2];
            let mut xv = [0.0; 2];
            for k in 0..4 {
                for c in 0..2 {
                    x[c] += n[k] * p[k][c];
                    xu[c] += du[k] * p[k][c];
                    xv[c] += dv[k] * p[k][c];
                }
            }
            let jac = (xu[0] * xv[1] - xu[1] * xv[0]).abs();
            total += wu * wv * jac * f(x);
        }
    }
    total
}

impl RecoveryStrips {
    /// ⟨h_t, f⟩ over the exact strip geometry.
    pub fn integrate(&self, f: &dyn Fn(Point2) -> f64) -> f64 {
        self.pieces.iter().map(|p| p.value * piece_integral(self.dim, &p.polygon, f)).sum()
    }

    /// ‖h_t‖_{L¹} over the exact strip geometry.
    pub fn l1_norm(&self) -> f64 {
        self.pieces.iter().map(|p| p.value.abs() * piece_measure(self.dim, &p.polygon)).sum()
    }
}

/// Newton projection of a point onto Z along ∇φ̄.
fn project_to_zero_set(field: &AdjointField, mut p: Point2) -> Point2 {
    for _ in 0..4 {
        let v = field.value_at(p);
        let g = field.gradient_at(p);
        let gg = g[0] * g[0] + g[1] * g[1];
        if gg == 0.0 || v == 0.0 {
            break;
        }
        p = [p[0] - v * g[0] / gg, p[1] - v * g[1] / gg];
    }
    p
}

fn unit_gradient(field: &AdjointField, p: Point2) -> Point2 {
    let g = field.gradient_at(p);
    let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
    [g[0] / n, g[1] / n]
}

/// Lower estimate of the tubular-neighbourhood radius of Z: min |∇φ̄| / ‖∇²φ̄‖_F over
/// the surface nodes, with the Hessian from differences of the gradient.
fn reach_estimate(field: &AdjointField, sm: &SurfaceMeasure) -> f64 {
    let grid = field.grid();
    let d = 0.5 * grid.spacing(0).min(grid.spacing(1));
    sm.nodes
        .iter()
        .zip(&sm.grad_norm)
        .map(|(p, gn)| {
            let gx1 = field.gradient_at([p[0] + d, p[1]]);
            let gx0 = field.gradient_at([p[0] - d, p[1]]);
            let gy1 = field.gradient_at([p[0], p[1] + d]);
            let gy0 = field.gradient_at([p[0], p[1] - d]);
            let h = [
                (gx1[0] - gx0[0]) / (2.0 * d),
                (gx1[1] - gx0[1]) / (2.0 * d),
                (gy1[0] - gy0[0]) / (2.0 * d),
                (gy1[1] - gy0[1]) / (2.0 * d),
            ];
            let hn = h.iter().map(|v| v * v).sum::<f64>().sqrt();
            if hn == 0.0 {
                f64::INFINITY
            } else {
                gn / hn
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Recovery strips of step t for the direction g·H^{d−1}|_Z: a one-sided strip of normal
/// width t|g|/2 on the side {φ̄ > 0} where g > 0 and {φ̄ < 0} where g < 0, with
/// h_t = 2 sign(g)/t on it.
pub fn recovery_strip_sequence(field: &AdjointField, sm: &SurfaceMeasure, t: f64) -> Result<RecoveryStrips> {
    if !(t > 0.0) {
        return Err(structural("strip step must be positive"));
    }
    let g = sm.density()?;
    let grid = field.grid();
    let dim = grid.dim();
    let (lo, hi) = (grid.lower(), grid.upper());
    let inside = |p: Point2| (0..dim).all(|k| p[k] > lo[k] && p[k] < hi[k]);
    let mut pieces = Vec::new();
    if dim == 1 {
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for (k, node) in sm.nodes.iter().enumerate() {
            if g[k] == 0.0 {
                continue;
            }
            let side = g[k].signum() * sm.normals[k][0];
            let w = 0.5 * t * g[k].abs();
            let (a, b) = (node[0], node[0] + side * w);
            if !inside([b, 0.0]) {
                return Err(Error::StepTooLarge(format!("strip at {} leaves the domain for t = {t:e}", node[0])));
            }
            intervals.push((a.min(b), a.max(b)));
            pieces.push(StripPiece { polygon: vec![[a.min(b), 0.0], [a.max(b), 0.0]], value: 2.0 * g[k].signum() / t });
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        if intervals.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::StepTooLarge(format!("strips overlap for t = {t:e}")));
        }
    } else {
        let w_max = 0.5 * t * g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if w_max > 0.0 && w_max > 0.5 * reach_estimate(field, sm) {
            return Err(Error::StepTooLarge(format!(
                "strip width {w_max:e} exceeds half the estimated reach of the zero set"
            )));
        }
        let per_segment: Vec<Result<Vec<StripPiece>>> = (0..sm.len())
            .into_par_iter()
            .map(|k| {
                if g[k] == 0.0 {
                    return Ok(Vec::new());
                }
                let [p, q] = sm.segments[k];
                let side = g[k].signum();
                let w = 0.5 * t * g[k].abs();
                let base: Vec<Point2> = (0..=SUBDIVISIONS)
                    .map(|j| {
                        let s = j as f64 / SUBDIVISIONS as f64;
                        project_to_zero_set(field, [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])])
                    })
                    .collect();
                let normals: Vec<Point2> = base.iter().map(|b| unit_gradient(field, *b)).collect();
                let mut out = Vec::with_capacity(SUBDIVISIONS);
                for j in 0..SUBDIVISIONS {
                    let (b0, b1) = (base[j], base[j + 1]);
                    let o0 = [b0[0] + side * w * normals[j][0], b0[1] + side * w * normals[j][1]];
                    let o1 = [b1[0] + side * w * normals[j + 1][0], b1[1] + side * w * normals[j + 1][1]];
                    if !(inside(o0) && inside(o1) && inside(b0) && inside(b1)) {
                        return Err(Error::StepTooLarge(format!("strip leaves the domain for t = {t:e}")));
                    }
                    out.push(StripPiece { polygon: vec![b0, b1, o1, o0], value: 2.0 * side / t });
                }
                Ok(out)
            })
            .collect();
        for r in per_segment {
            pieces.extend(r?);
        }
    }
    let (grid_values, clamped_cells) = rasterize(field, &pieces, t);
    Ok(RecoveryStrips { t, dim, pieces, grid_values, clamped_cells })
}

fn rasterize(field: &AdjointField, pieces: &[StripPiece], t: f64) -> (Vec<f64>, usize) {
    let grid = field.grid();
    let dim = grid.dim();
    let n = grid.cells_per_axis();
    let vol = grid.cell_volume();
    let contributions: Vec<Vec<(usize, f64)>> = pieces
        .par_iter()
        .map(|piece| {
            let xs: Vec<f64> = piece.polygon.iter().map(|p| p[0]).collect();
            let xr = grid.cell_range(0, xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let mut out = Vec::new();
            if dim == 1 {
                let (a, b) = (xs[0].min(xs[1]), xs[0].max(xs[1]));
                for i in xr {
                    let (clo, chi) = grid.cell_bounds(i);
                    let len = (b.min(chi[0]) - a.max(clo[0])).max(0.0);
                    if len > 0.0 {
                        out.push((i, piece.value * len / vol));
                    }
                }
            } else {
                let ys: Vec<f64> = piece.polygon.iter().map(|p| p[1]).collect();
                let yr = grid.cell_range(1, ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                for j in yr {
                    for i in xr.clone() {
                        let idx = i + n * j;
                        let (clo, chi) = grid.cell_bounds(idx);
                        let a = polygon_area(&clip_to_rect(&piece.polygon, clo, chi));
                        if a > 0.0 {
                            out.push((idx, piece.value * a / vol));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut h = vec![0.0; grid.len()];
    for list in contributions {
        for (idx, c) in list {
            h[idx] += c;
        }
    }
    let xbar = field.control();
    let mut clamped = 0;
    for (hi, xb) in h.iter_mut().zip(&xbar) {
        let u = xb + t * *hi;
        if !(-1.0..=1.0).contains(&u) {
            clamped += 1;
            *hi = (u.clamp(-1.0, 1.0) - xb) / t;
        }
    }
    (h, clamped)
}

/// Observed and target values of the three strip limits.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryRow {
    pub t: f64,
    /// ⟨h_t, v⟩ for each test function.
    pub limit11: Vec<f64>,
    /// ‖h_t‖_{L¹}.
    pub limit12: f64,
    /// ⟨φ̄, 2h_t/t⟩.
    pub limit22: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryLimitsReport {
    pub rows: Vec<RecoveryRow>,
    /// ⟨g·H^{d−1}|_Z, v⟩ for each test function.
    pub target11: Vec<f64>,
    /// ∫|g| dH^{d−1}.
    pub target12: f64,
    /// ½ ∫ g² |∇φ̄| dH^{d−1}.
    pub target22: f64,
    /// Observed convergence orders from the last two steps (11 entries first, then 12, 22);
    /// `None` where the error already vanishes.
    pub rates: Vec<Option<f64>>,
}

impl RecoveryLimitsReport {
    /// Largest relative error of the last row.
    pub fn final_relative_error(&self) -> f64 {
        let last = match self.rows.last() {
            Some(r) => r,
            None => return 0.0,
        };
        let rel = |v: f64, target: f64| {
            if target == 0.0 {
                v.abs()
            } else {
                (v - target).abs() / target.abs()
            }
        };
        let mut worst: f64 = 0.0;
        for (v, target) in last.limit11.iter().zip(&self.target11) {
            worst = worst.max(rel(*v, *target));
        }
        worst.max(rel(last.limit12, self.target12)).max(rel(last.limit22, self.target22))
    }
}

/// Tabulates the strip limits along a schedule of steps against their targets.
pub fn verify_recovery_limits(
    field: &AdjointField,
    sm: &SurfaceMeasure,
    t_schedule: &[f64],
    test_functions: &[&(dyn Fn(Point2) -> f64 + Sync)],
) -> Result<RecoveryLimitsReport> {
    let target11 = test_functions.iter().map(|v| sm.pair(*v)).collect::<Result<Vec<_>>>()?;
    let target12 = sm.total_variation()?;
    let target22 = super::surface_curvature(sm)?;
    let mut rows = Vec::with_capacity(t_schedule.len());
    for &t in t_schedule {
        let strips = recovery_strip_sequence(field, sm, t)?;
        let limit11 = test_functions.iter().map(|v| strips.integrate(*v)).collect();
        let limit12 = strips.l1_norm();
        let limit22 = 2.0 / t * strips.integrate(&|p| field.value_at(p));
        rows.push(RecoveryRow { t, limit11, limit12, limit22 });
    }
    let mut rates = Vec::new();
    if rows.len() >= 2 {
        let (a, b) = (&rows[rows.len() - 2], &rows[rows.len() - 1]);
        let rate = |ea: f64, eb: f64| -> Option<f64> {
            (ea > 0.0 && eb > 0.0).then(|| (ea / eb).ln() / (a.t / b.t).ln())
        };
        for (k, target) in target11.iter().enumerate() {
            rates.push(rate((a.limit11[k] - target).abs(), (b.limit11[k] - target).abs()));
        }
        rates.push(rate((a.limit12 - target12).abs(), (b.limit12 - target12).abs()));
        rates.push(rate((a.limit22 - target22).abs(), (b.limit22 - target22).abs()));
    }
    Ok(RecoveryLimitsReport { rows, target11, target12, target22, rates })
}
