use rayon::prelude::*;
use serde::Serialize;

use super::AdjointField;
use crate::error::{structural, Error, Result};
use crate::linalg::{clip_half_plane, polygon_area, Point2};

/// Estimate of K(φ̄) = ¼ liminf_{s↘0} s / L^d({|φ̄| ≤ s}).
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetConstant {
    pub s_schedule: Vec<f64>,
    pub measures: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Minimum over the last ⌈levels/2⌉ ratios; infinite when every band is empty.
    pub k_estimate: f64,
    /// Whether the tail ratios agree within 5%.
    pub monotone_flag: bool,
}

/// Measure of {|ℓ| ≤ s} ∩ cell for the linear model ℓ(p) = v + g·(p − c).
fn cell_band_measure(dim: usize, lo: Point2, hi: Point2, v: f64, g: Point2, s: f64) -> f64 {
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    if dim == 1 {
        let (a, b) = (lo[0], hi[0]);
        if g[0] == 0.0 {
            return if v.abs() <= s { b - a } else { 0.0 };
        }
        let r1 = c[0] + (-s - v) / g[0];
        let r2 = c[0] + (s - v) / g[0];
        let (l, u) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        return (u.min(b) - l.max(a)).max(0.0);
    }
    // Range of ℓ over the rectangle decides the trivial cases without clipping.
    let half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
    let spread = g[0].abs() * half[0] + g[1].abs() * half[1];
    if v - spread > s || v + spread < -s {
        return 0.0;
    }
    let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    if v + spread <= s && v - spread >= -s {
        return area;
    }
    let rect = [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    // ℓ(p) ≤ s  ⇔  g·p ≤ s − v + g·c
    let gc = g[0] * c[0] + g[1] * c[1];
    let upper = clip_half_plane(&rect, g, s - v + gc);
    let below = clip_half_plane(&rect, g, -s - v + gc);
    (polygon_area(&upper) - polygon_area(&below)).max(0.0)
}

/// Band measures L^d({|φ̄| ≤ s_j}), s_j = s_max·2⁻ʲ (j = 0..=levels), from per-cell linear
/// models, and the resulting estimate of K(φ̄).
pub fn level_set_constant(field: &AdjointField, s_max: f64, levels: usize) -> Result<LevelSetConstant> {
    if !(s_max > 0.0) || levels == 0 {
        return Err(structural("level-set constant needs s_max > 0 and at least one level"));
    }
    let grid = field.grid();
    let s_schedule: Vec<f64> = (0..=levels).map(|j| s_max * 0.5f64.powi(j as i32)).collect();
    let per_cell: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (lo, hi) = grid.cell_bounds(idx);
            let (v, g) = field.cell_model(idx);
            s_schedule.iter().map(|&s| cell_band_measure(grid.dim(), lo, hi, v, g, s)).collect()
        })
        .collect();
    let mut measures = vec![0.0; s_schedule.len()];
    for cell in &per_cell {
        for (m, c) in measures.iter_mut().zip(cell) {
            *m += c;
        }
    }
    let s_min_cells = per_cell.iter().filter(|c| c[levels] > 0.0).count();
    if measures.iter().all(|m| *m == 0.0) {
        return Ok(LevelSetConstant {
            ratios: vec![f64::INFINITY; s_schedule.len()],
            s_schedule,
            measures,
            k_estimate: f64::INFINITY,
            monotone_flag: true,
        });
    }
    if s_min_cells < 4 {
        return Err(Error::Resolution(format!(
            "band {{|φ̄| ≤ {:e}}} meets only {s_min_cells} cells",
            s_schedule[levels]
        )));
    }
    let ratios: Vec<f64> = s_schedule
        .iter()
        .zip(&measures)
        .map(|(s, m)| if *m > 0.0 { s / (4.0 * m) } else { f64::INFINITY })
        .collect();
    let tail_len = levels.div_ceil(2);
    let tail = &ratios[ratios.len() - tail_len..];
    let k_estimate = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let max = tail.iter().copied().fold(0.0f64, f64::max);
    let monotone_flag = tail_len == 1 || (max - k_estimate) <= 0.05 * max;
    Ok(LevelSetConstant { s_schedule, measures, ratios, k_estimate, monotone_flag })
}
