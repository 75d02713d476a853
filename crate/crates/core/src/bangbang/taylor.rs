use rayon::prelude::*;
use serde::Serialize;

use super::{AdjointField, SurfaceMeasure};
use crate::error::{structural, Result};
use crate::linalg::{clip_half_plane, Point2};

/// One row of the L¹ expansion check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TaylorRow {
    pub t: f64,
    /// ∫|−φ̄ + t v| − ∫|φ̄| − t ∫ x̄ v.
    pub remainder: f64,
    /// t² ∫_Z v²/|∇φ̄| dH^{d−1}.
    pub surface_term: f64,
    /// (remainder − surface_term) / t².
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorReport {
    pub rows: Vec<TaylorRow>,
    pub max_abs_residual: f64,
    /// Whether |residual| decreases along the schedule (or is already below 1e-9).
    pub converging: bool,
}

/// ∫ over a convex polygon of an affine function, given its values at the vertices.
fn polygon_integral_affine(poly: &[Point2], f: &dyn Fn(Point2) -> f64) -> f64 {
    // Fan triangulation; each triangle integrates an affine f exactly by its centroid.
    let mut total = 0.0;
    for k in 1..poly.len().saturating_sub(1) {
        let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        total += area * f(centroid);
    }
    total
}

/// Affine function through three (point, value) pairs, as (coefficients, offset).
fn affine_through(p: [Point2; 3], v: [f64; 3]) -> (Point2, f64) {
    let (a, b, c) = (p[0], p[1], p[2]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let gx = ((v[1] - v[0]) * (c[1] - a[1]) - (v[2] - v[0]) * (b[1] - a[1])) / det;
    let gy = ((v[2] - v[0]) * (b[0] - a[0]) - (v[1] - v[0]) * (c[0] - a[0])) / det;
    ([gx, gy], v[0] - gx * a[0] - gy * a[1])
}

/// Per-element contribution ∫|f_t| − ∫|f_0| − t ∫ sign(f_0) v with f_s = −φ̄ + s v affine
/// on the element; exactly zero when neither f_0 nor f_t changes sign and both agree.
fn element_remainder(poly: &[Point2], phi: [f64; 3], v: [f64; 3], pts: [Point2; 3], t: f64) -> f64 {
    let f0: Vec<f64> = phi.iter().map(|p| -p).collect();
    let ft: Vec<f64> = (0..3).map(|k| -phi[k] + t * v[k]).collect();
    let all_pos = |x: &[f64]| x.iter().all(|y| *y >= 0.0);
    let all_neg = |x: &[f64]| x.iter().all(|y| *y <= 0.0);
    if (all_pos(&f0) && all_pos(&ft)) || (all_neg(&f0) && all_neg(&ft)) {
        return 0.0;
    }
    let (g0, c0) = affine_through(pts, [f0[0], f0[1], f0[2]]);
    let (gt, ct) = affine_through(pts, [ft[0], ft[1], ft[2]]);
    let (gv, cv) = affine_through(pts, v);
    let eval = |g: Point2, c: f64| move |p: Point2| g[0] * p[0] + g[1] * p[1] + c;
    // ∫|f| = 2∫_{f>0} f − ∫ f ;  ∫ sign(f0) v = 2∫_{f0>0} v − ∫ v
    let abs_int = |g: Point2, c: f64| {
        let pos = clip_half_plane(poly, [-g[0], -g[1]], c);
        2.0 * polygon_integral_affine(&pos, &eval(g, c)) - polygon_integral_affine(poly, &eval(g, c))
    };
    let pos0 = clip_half_plane(poly, [-g0[0], -g0[1]], c0);
    let signed_v = 2.0 * polygon_integral_affine(&pos0, &eval(gv, cv)) - polygon_integral_affine(poly, &eval(gv, cv));
    abs_int(gt, ct) - abs_int(g0, c0) - t * signed_v
}

/// Checks ∫|−φ̄ + t v| = ∫|φ̄| + t ∫ x̄ v + t² ∫_Z v²/|∇φ̄| dH^{d−1} + o(t²), x̄ = −sign φ̄.
///
/// `v` is a grid function (node values). φ̄ and v are taken affine on each element (cells
/// in 1D, two triangles per cell in 2D) with values at the element vertices; φ̄ comes
/// from its closed form when available, v is interpolated from the nodes.
pub fn l1_taylor_check(field: &AdjointField, sm: &SurfaceMeasure, v: &[f64], t_schedule: &[f64]) -> Result<TaylorReport> {
    let grid = field.grid();
    if v.len() != grid.len() {
        return Err(structural("test function length differs from the grid"));
    }
    let v_at = |p: Point2| field.interpolate(p, &|k| v[k]);
    let surface = sm.surface_term(&v_at);
    // 1D cells are extruded to unit-height rectangles so the same element formulas apply.
    let elements: Vec<[Point2; 3]> = (0..grid.len())
        .flat_map(|idx| {
            let (lo, hi) = grid.cell_bounds(idx);
            let (a, b, c, d) = if grid.dim() == 1 {
                ([lo[0], 0.0], [hi[0], 0.0], [hi[0], 1.0], [lo[0], 1.0])
            } else {
                (lo, [hi[0], lo[1]], hi, [lo[0], hi[1]])
            };
            [[a, b, c], [a, c, d]]
        })
        .collect();
    let dim = grid.dim();
    let point = |p: Point2| if dim == 1 { [p[0], 0.0] } else { p };
    let mut rows = Vec::with_capacity(t_schedule.len());
    for &t in t_schedule {
        let parts: Vec<f64> = elements
            .par_iter()
            .map(|pts| {
                let phi = [field.value_at(point(pts[0])), field.value_at(point(pts[1])), field.value_at(point(pts[2]))];
                let vv = [v_at(point(pts[0])), v_at(point(pts[1])), v_at(point(pts[2]))];
                element_remainder(pts, phi, vv, *pts, t)
            })
            .collect();
        let remainder: f64 = parts.iter().sum();
        let surface_term = t * t * surface;
        rows.push(TaylorRow { t, remainder, surface_term, residual: (remainder - surface_term) / (t * t) });
    }
    let max_abs_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let converging = rows
        .windows(2)
        .all(|w| w[1].residual.abs() <= w[0].residual.abs() * (1.0 + 1e-9) || w[1].residual.abs() < 1e-9);
    Ok(TaylorReport { rows, max_abs_residual, converging })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bangbang::{extract_zero_set, GRAD_FLOOR};
    use crate::model::Grid;

    fn linear() -> (AdjointField, SurfaceMeasure) {
        let grid = Grid::interval(0.0, 1.0, 2048).unwrap();
        let f = AdjointField::analytic(grid, |p| p[0] - 0.5, |_| [1.0, 0.0]).unwrap();
        let sm = extract_zero_set(&f, GRAD_FLOOR).unwrap();
        (f, sm)
    }

    #[test]
    fn constant_direction_has_zero_residual() {
        let (f, sm) = linear();
        let v = vec![1.0; f.grid().len()];
        let ts: Vec<f64> = (2..=12).map(|k| 0.5f64.powi(k)).collect();
        let r = l1_taylor_check(&f, &sm, &v, &ts).unwrap();
        assert!(r.max_abs_residual < 1e-6, "{:?}", r.rows);
    }

    #[test]
    fn zero_direction() {
        let (f, sm) = linear();
        let v = vec![0.0; f.grid().len()];
        let r = l1_taylor_check(&f, &sm, &v, &[0.1, 0.01]).unwrap();
        assert!(r.rows.iter().all(|row| row.remainder == 0.0 && row.residual == 0.0));
    }

    #[test]
    fn linear_direction_converges() {
        let (f, sm) = linear();
        let v: Vec<f64> = f.grid().nodes().iter().map(|p| p[0]).collect();
        let ts: Vec<f64> = (3..=10).map(|k| 0.5f64.powi(k)).collect();
        let r = l1_taylor_check(&f, &sm, &v, &ts).unwrap();
        assert!((sm.surface_term(&|p| p[0]) - 0.25).abs() < 1e-12);
        assert!(r.converging);
        let last = r.rows.last().unwrap().residual.abs();
        assert!(last < 4.0 * ts.last().unwrap());
    }
}
