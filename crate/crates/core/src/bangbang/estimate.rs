use serde::Serialize;

use super::SurfaceMeasure;
use crate::error::Result;
use crate::linalg::Point2;

/// Slack below which the quadratic in α counts as negative.
pub const ESTIMATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EstimateOutcome {
    Ok,
    Violated { v_index: usize, alpha: f64, value: f64 },
}

/// Checks α²Q/2 − α⟨h, v⟩ + ∫_Z v²/|∇φ̄| dH^{d−1} ≥ 0 for h = g·H^{d−1}|_Z, every sampled v
/// and every sampled α, plus the minimizing α = ⟨h, v⟩/Q.
pub fn fundamental_estimate_check(
    sm: &SurfaceMeasure,
    v_samples: &[&dyn Fn(Point2) -> f64],
    alpha_samples: &[f64],
    q: f64,
) -> Result<EstimateOutcome> {
    for (v_index, v) in v_samples.iter().enumerate() {
        let hv = sm.pair(*v)?;
        let s = sm.surface_term(*v);
        let mut alphas = alpha_samples.to_vec();
        if q > 0.0 {
            alphas.push(hv / q);
        }
        for alpha in alphas {
            let value = 0.5 * alpha * alpha * q - alpha * hv + s;
            if value < -ESTIMATE_TOL {
                return Ok(EstimateOutcome::Violated { v_index, alpha, value });
            }
        }
    }
    Ok(EstimateOutcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bangbang::{extract_zero_set, surface_curvature, AdjointField, GRAD_FLOOR};
    use crate::model::Grid;

    fn canonical() -> SurfaceMeasure {
        let grid = Grid::interval(0.0, 1.0, 256).unwrap();
        let f = AdjointField::analytic(grid, |p| p[0] - 0.5, |_| [1.0, 0.0]).unwrap();
        extract_zero_set(&f, GRAD_FLOOR).unwrap().with_density(&|_| 2.0)
    }

    #[test]
    fn holds_for_true_curvature() {
        let sm = canonical();
        let q = surface_curvature(&sm).unwrap();
        let polys: Vec<Box<dyn Fn(Point2) -> f64>> = vec![
            Box::new(|p| p[0]),
            Box::new(|p| 1.0 - 3.0 * p[0] * p[0]),
            Box::new(|p| 5.0 * p[0].powi(3) - 2.0),
            Box::new(|_| 0.0),
        ];
        let refs: Vec<&dyn Fn(Point2) -> f64> = polys.iter().map(|b| b.as_ref()).collect();
        let alphas: Vec<f64> = (-20..=20).map(|k| 0.25 * k as f64).collect();
        assert_eq!(fundamental_estimate_check(&sm, &refs, &alphas, q).unwrap(), EstimateOutcome::Ok);
    }

    #[test]
    fn corrupted_curvature_is_caught() {
        let sm = canonical();
        let q = surface_curvature(&sm).unwrap() / 10.0;
        // v = g |∇φ̄| on Z
        let v = |_: Point2| 2.0;
        let out = fundamental_estimate_check(&sm, &[&v], &[1.0], q).unwrap();
        assert!(matches!(out, EstimateOutcome::Violated { .. }));
    }
}
