use rayon::prelude::*;
use serde::Serialize;

use super::AdjointField;
use crate::error::{structural, Error, Result};
use crate::linalg::Point2;

/// Minimal |∇φ̄| accepted on the zero set.
pub const GRAD_FLOOR: f64 = 1e-6;

/// The measure g·H^{d−1} restricted to the zero set Z = {φ̄ = 0}, discretized by nodes
/// on Z with local surface weights (unit atoms in 1D, segment lengths in 2D).
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceMeasure {
    pub dim: usize,
    pub nodes: Vec<Point2>,
    pub weights: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// Unit normals ∇φ̄/|∇φ̄| at the nodes, pointing into {φ̄ > 0}.
    pub normals: Vec<Point2>,
    /// Segment endpoints (2D only; in 1D both endpoints equal the node).
    pub segments: Vec<[Point2; 2]>,
    pub density: Option<Vec<f64>>,
}

impl SurfaceMeasure {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// H^{d−1}(Z): number of points in 1D, length in 2D.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn with_density(&self, g: &dyn Fn(Point2) -> f64) -> Self {
        let mut s = self.clone();
        s.density = Some(self.nodes.iter().map(|p| g(*p)).collect());
        s
    }

    pub fn with_density_values(&self, g: Vec<f64>) -> Result<Self> {
        if g.len() != self.len() {
            return Err(structural(format!("density has {} values for {} nodes", g.len(), self.len())));
        }
        let mut s = self.clone();
        s.density = Some(g);
        Ok(s)
    }

    pub fn density(&self) -> Result<&[f64]> {
        self.density.as_deref().ok_or_else(|| structural("surface density not set"))
    }

    /// ∫|g| dH^{d−1}.
    pub fn total_variation(&self) -> Result<f64> {
        let g = self.density()?;
        Ok(self.weights.iter().zip(g).map(|(w, g)| w * g.abs()).sum())
    }

    /// ⟨g·H^{d−1}|_Z, v⟩ = ∫_Z g v dH^{d−1}.
    pub fn pair(&self, v: &dyn Fn(Point2) -> f64) -> Result<f64> {
        let g = self.density()?;
        Ok(self.nodes.iter().zip(&self.weights).zip(g).map(|((p, w), g)| w * g * v(*p)).sum())
    }

    /// ∫_Z v²/|∇φ̄| dH^{d−1}.
    pub fn surface_term(&self, v: &dyn Fn(Point2) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.grad_norm)
            .map(|((p, w), gn)| w * v(*p).powi(2) / gn)
            .sum()
    }
}

/// ½ ∫_Z g² |∇φ̄| dH^{d−1}.
pub fn surface_curvature(sm: &SurfaceMeasure) -> Result<f64> {
    let g = sm.density()?;
    Ok(0.5
        * sm.weights
            .iter()
            .zip(g)
            .zip(&sm.grad_norm)
            .map(|((w, g), gn)| w * g * g * gn)
            .sum::<f64>())
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Root of φ̄ on the segment p→q, given endpoint values of opposite sign.
fn edge_root(field: &AdjointField, p: Point2, q: Point2, vp: f64, vq: f64) -> Point2 {
    let s = if field.has_closed_form() {
        let f = |s: f64| field.value_at([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        if vp == 0.0 {
            0.0
        } else {
            bisect(&f, 0.0, 1.0)
        }
    } else {
        vp / (vp - vq)
    };
    [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
}

struct RawNode {
    node: Point2,
    weight: f64,
    segment: [Point2; 2],
}

/// Extracts Z: bisection roots in 1D, marching squares on the lattice of cell centres
/// in 2D (saddles resolved by the value at the square centre).
pub fn extract_zero_set(field: &AdjointField, grad_floor: f64) -> Result<SurfaceMeasure> {
    let grid = field.grid();
    let n = grid.cells_per_axis();
    let vals = field.values();
    let raw: Vec<RawNode> = if grid.dim() == 1 {
        let mut out = Vec::new();
        for i in 0..n {
            let c = grid.center_1d(0, i);
            if vals[i] == 0.0 {
                out.push(RawNode { node: [c, 0.0], weight: 1.0, segment: [[c, 0.0]; 2] });
                continue;
            }
            if i + 1 < n && vals[i + 1] != 0.0 && (vals[i] > 0.0) != (vals[i + 1] > 0.0) {
                let c1 = grid.center_1d(0, i + 1);
                let z = edge_root(field, [c, 0.0], [c1, 0.0], vals[i], vals[i + 1])[0];
                out.push(RawNode { node: [z, 0.0], weight: 1.0, segment: [[z, 0.0]; 2] });
            }
        }
        out
    } else {
        let rows: Vec<Vec<RawNode>> = (0..n.saturating_sub(1))
            .into_par_iter()
            .map(|j| {
                let mut out = Vec::new();
                for i in 0..n - 1 {
                    let idx = [i + n * j, i + 1 + n * j, i + 1 + n * (j + 1), i + n * (j + 1)];
                    let v: Vec<f64> = idx.iter().map(|&k| vals[k]).collect();
                    let pos: Vec<bool> = v.iter().map(|x| *x >= 0.0).collect();
                    if pos.iter().all(|&b| b) || pos.iter().all(|&b| !b) {
                        continue;
                    }
                    let pts: Vec<Point2> = idx.iter().map(|&k| grid.node(k)).collect();
                    let cross = |e: usize| -> Option<Point2> {
                        let (a, b) = (e, (e + 1) % 4);
                        (pos[a] != pos[b]).then(|| edge_root(field, pts[a], pts[b], v[a], v[b]))
                    };
                    let c: Vec<Option<Point2>> = (0..4).map(cross).collect();
                    let mut segs: Vec<(Point2, Point2)> = Vec::new();
                    let crossing: Vec<usize> = (0..4).filter(|&e| c[e].is_some()).collect();
                    if crossing.len() == 2 {
                        segs.push((c[crossing[0]].unwrap(), c[crossing[1]].unwrap()));
                    } else if crossing.len() == 4 {
                        let centre = [0.5 * (pts[0][0] + pts[1][0]), 0.5 * (pts[0][1] + pts[3][1])];
                        let vc = if field.has_closed_form() {
                            field.value_at(centre)
                        } else {
                            0.25 * v.iter().sum::<f64>()
                        };
                        if (vc >= 0.0) == pos[0] {
                            segs.push((c[0].unwrap(), c[1].unwrap()));
                            segs.push((c[2].unwrap(), c[3].unwrap()));
                        } else {
                            segs.push((c[3].unwrap(), c[0].unwrap()));
                            segs.push((c[1].unwrap(), c[2].unwrap()));
                        }
                    }
                    for (p, q) in segs {
                        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                        if len > 0.0 {
                            let node = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                            out.push(RawNode { node, weight: len, segment: [p, q] });
                        }
                    }
                }
                out
            })
            .collect();
        rows.into_iter().flatten().collect()
    };
    let mut sm = SurfaceMeasure {
        dim: grid.dim(),
        nodes: Vec::with_capacity(raw.len()),
        weights: Vec::with_capacity(raw.len()),
        grad_norm: Vec::with_capacity(raw.len()),
        normals: Vec::with_capacity(raw.len()),
        segments: Vec::with_capacity(raw.len()),
        density: None,
    };
    for r in raw {
        let g = field.gradient_at(r.node);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if !(gn >= grad_floor) {
            return Err(Error::AssumptionViolation(format!(
                "|∇φ̄| = {gn:e} below {grad_floor:e} at zero-set point {:?}",
                r.node
            )));
        }
        sm.nodes.push(r.node);
        sm.weights.push(r.weight);
        sm.grad_norm.push(gn);
        sm.normals.push([g[0] / gn, g[1] / gn]);
        sm.segments.push(r.segment);
    }
    Ok(sm)
}
