use super::{CurvatureKind, CurvatureMethod, CurvatureValue};
use crate::cones::{critical_cone_membership, second_order_tangent_set, ConeQuery, SecondOrderTangentSet};
use crate::error::{domain, structural, unsupported, Result};
use crate::linalg::{dot, in_conic_hull, mat_vec, norm2};
use crate::model::{AdmissibleSet, ConvexSet, LevelSet, ANALYTIC_FEASIBILITY_TOL};

/// Exact curvature for sets that admit a closed form: polyhedric sets (value 0), the
/// unit ball and scalar level sets via the second-order tangent set.
pub fn curvature_closed_form(set: &AdmissibleSet, x: &[f64], phi: &[f64], h: &[f64]) -> Result<CurvatureValue> {
    if matches!(set, AdmissibleSet::PowerEpigraph { .. }) {
        return Err(unsupported("no closed form for power epigraphs; use the brute-force estimator"));
    }
    let q = ConeQuery::new(set, x)?.with_functional(phi)?;
    if !critical_cone_membership(&q, h, 1e-8)? {
        return Err(domain("direction is not in the critical cone"));
    }
    if set.is_polyhedral() {
        return Ok(CurvatureValue::exact(CurvatureKind::Finite(0.0), CurvatureMethod::PolyhedricClosedForm));
    }
    match set {
        AdmissibleSet::Convex(k @ ConvexSet::UnitBall { .. }) => {
            let sots = second_order_tangent_set(k, x, h)?;
            Ok(CurvatureValue::exact(sots.inf_linear(phi), CurvatureMethod::SotClosedForm))
        }
        AdmissibleSet::LevelSet(ls) => {
            if ls.map.dim_out() != 1 {
                return Err(unsupported("closed form implemented for scalar level sets only"));
            }
            let z = ls.map.value(x);
            let grad = ls.map.jacobian(x).swap_remove(0);
            let gh = dot(&grad, h);
            let curv = ls.map.hessian_form(x, h, h)[0];
            // {r : G′r + G″h² ∈ T²_K(G(x), G′h)}
            let sots = second_order_tangent_set(&ls.cone, &z, &[gh])?;
            let value = match sots {
                SecondOrderTangentSet::AllSpace { .. } => SecondOrderTangentSet::AllSpace { dim: x.len() }.inf_linear(phi),
                SecondOrderTangentSet::HalfLineNonPos => {
                    if norm2(&grad) == 0.0 {
                        return Err(domain("vanishing constraint gradient at an active point"));
                    }
                    SecondOrderTangentSet::HalfSpace { normal: grad, bound: -curv }.inf_linear(phi)
                }
                SecondOrderTangentSet::HalfSpace { normal, bound } => {
                    let normal_r: Vec<f64> = grad.iter().map(|g| g * normal[0]).collect();
                    SecondOrderTangentSet::HalfSpace { normal: normal_r, bound: bound - normal[0] * curv }
                        .inf_linear(phi)
                }
                SecondOrderTangentSet::PolyhedralCone { rows } => {
                    let a = rows[0][0];
                    SecondOrderTangentSet::HalfSpace {
                        normal: grad.iter().map(|g| g * a).collect(),
                        bound: -a * curv,
                    }
                    .inf_linear(phi)
                }
                SecondOrderTangentSet::Empty => CurvatureKind::PlusInfinity,
            };
            Ok(CurvatureValue::exact(value, CurvatureMethod::SotClosedForm))
        }
        _ => Err(unsupported("no closed form for this set")),
    }
}

/// Q_C^{x,φ}(h) = Q_K^{G(x),−λ}(G′(x)h) + ⟨λ, G″(x)h²⟩ for C = G⁻¹(K), given a
/// multiplier λ ∈ N_K(G(x)) with φ + G′(x)ᵀλ = 0.
pub fn curvature_pullback(ls: &LevelSet, x: &[f64], phi: &[f64], lambda: &[f64], h: &[f64]) -> Result<CurvatureValue> {
    let n = ls.map.dim_in();
    let m = ls.map.dim_out();
    if x.len() != n || phi.len() != n || h.len() != n || lambda.len() != m {
        return Err(structural("pullback: dimension mismatch"));
    }
    let z = ls.map.value(x);
    if !ls.cone.contains(&z, ANALYTIC_FEASIBILITY_TOL) {
        return Err(domain("base point is not feasible"));
    }
    let jac = ls.map.jacobian(x);
    let mut resid = phi.to_vec();
    for (l, row) in lambda.iter().zip(&jac) {
        for (r, g) in resid.iter_mut().zip(row) {
            *r += l * g;
        }
    }
    if norm2(&resid) > 1e-8 {
        return Err(domain(format!("multiplier inconsistent: ‖φ + G′ᵀλ‖ = {:e}", norm2(&resid))));
    }
    let normals = ls.cone.tangent_rows(&z, ANALYTIC_FEASIBILITY_TOL);
    if !in_conic_hull(&normals, lambda, 1e-9) {
        return Err(domain("multiplier is not in the normal cone of K"));
    }
    let gh = mat_vec(&jac, h);
    let tangent_rows = ls.cone.tangent_rows(&z, ANALYTIC_FEASIBILITY_TOL);
    let ngh = norm2(&gh);
    if tangent_rows.iter().any(|r| dot(r, &gh) > 1e-10 * norm2(r) * ngh) {
        return Err(domain("G′(x)h is not tangent to K"));
    }
    if dot(phi, h).abs() > 1e-8 * norm2(phi) * norm2(h) {
        return Err(domain("direction is not in the critical cone"));
    }
    let neg_lambda: Vec<f64> = lambda.iter().map(|v| -v).collect();
    let outer = match &ls.cone {
        ConvexSet::UnitBall { .. } => second_order_tangent_set(&ls.cone, &z, &gh)?.inf_linear(&neg_lambda),
        _ => CurvatureKind::Finite(0.0),
    };
    let curv = dot(lambda, &ls.map.hessian_form(x, h, h));
    Ok(CurvatureValue::exact(outer.plus(curv), CurvatureMethod::Pullback))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnConstraintMap;
    use std::sync::Arc;

    fn ball_level_set() -> LevelSet {
        LevelSet::new(Arc::new(FnConstraintMap::unit_sphere(2)), ConvexSet::NonPositive, true).unwrap()
    }

    #[test]
    fn polyhedric_sets_have_zero_curvature() {
        let c = AdmissibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let v = curvature_closed_form(&c, &[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(v.value, CurvatureKind::Finite(0.0));
        assert_eq!(v.method, CurvatureMethod::PolyhedricClosedForm);
    }

    #[test]
    fn unit_ball_closed_form() {
        let c = AdmissibleSet::Convex(ConvexSet::UnitBall { dim: 2 });
        let v = curvature_closed_form(&c, &[1.0, 0.0], &[-2.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(v.value, CurvatureKind::Finite(2.0));
        let v = curvature_closed_form(&c, &[1.0, 0.0], &[-2.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(v.value, CurvatureKind::Finite(0.0));
    }

    #[test]
    fn scalar_level_set_closed_form_matches_pullback() {
        let ls = ball_level_set();
        let c = AdmissibleSet::LevelSet(ls.clone());
        let v = curvature_closed_form(&c, &[1.0, 0.0], &[-2.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(v.value, CurvatureKind::Finite(2.0));
        let p = curvature_pullback(&ls, &[1.0, 0.0], &[-2.0, 0.0], &[1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(p.value, CurvatureKind::Finite(2.0));
    }

    #[test]
    fn pullback_is_two_homogeneous() {
        let ls = ball_level_set();
        let p = curvature_pullback(&ls, &[1.0, 0.0], &[-2.0, 0.0], &[1.0], &[0.0, 2.0]).unwrap();
        assert_eq!(p.value, CurvatureKind::Finite(8.0));
    }

    #[test]
    fn pullback_inactive_constraint() {
        let ls = ball_level_set();
        let p = curvature_pullback(&ls, &[0.2, 0.1], &[0.0, 0.0], &[0.0], &[1.0, -3.0]).unwrap();
        assert_eq!(p.value, CurvatureKind::Finite(0.0));
    }

    #[test]
    fn pullback_rejects_bad_multiplier() {
        let ls = ball_level_set();
        assert!(curvature_pullback(&ls, &[1.0, 0.0], &[-2.0, 0.0], &[0.9], &[0.0, 1.0]).is_err());
        assert!(curvature_pullback(&ls, &[1.0, 0.0], &[2.0, 0.0], &[-1.0], &[0.0, 1.0]).is_err());
    }
}
