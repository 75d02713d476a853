//! Radial, tangent, normal and critical cones of admissible sets, second-order tangent
//! sets of the canonical convex sets, and the O(t²) distance check for second-order
//! regularity.
//!
//! Sign convention: N_C(x) is the polar of T_C(x), so `φ ∈ −N_C(x)` means
//! `⟨φ, h⟩ ≥ 0` for every tangent `h`. Every set variant handled here has a tangent
//! cone of the form `{h : M h ≤ 0}`; the rows `M` generate the normal cone.

use serde::Serialize;

use crate::curvature::CurvatureKind;
use crate::error::{domain, structural, unsupported, Result};
use crate::linalg::{dot, in_conic_hull, norm2, project_onto_polyhedral_cone};
use crate::model::{AdmissibleSet, ConvexSet};

/// Relative slack for tangent and normal membership decisions.
pub const CONE_TOL: f64 = 1e-10;

/// A base point in a set, optionally with a functional φ ∈ −N_C(x).
#[derive(Debug, Clone)]
pub struct ConeQuery<'a> {
    set: &'a AdmissibleSet,
    base: Vec<f64>,
    rows: Vec<Vec<f64>>,
    functional: Option<Vec<f64>>,
}

impl<'a> ConeQuery<'a> {
    /// Fails if `base` is infeasible, has the wrong length, or the tangent cone is
    /// unavailable (level set without asserted constraint qualification).
    pub fn new(set: &'a AdmissibleSet, base: &[f64]) -> Result<Self> {
        let rows = set.tangent_rows(base)?;
        Ok(Self { set, base: base.to_vec(), rows, functional: None })
    }

    /// Attaches φ, which must satisfy φ ∈ −N_C(x).
    pub fn with_functional(mut self, phi: &[f64]) -> Result<Self> {
        self.set.check_dim(phi)?;
        let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
        if !in_conic_hull(&self.rows, &neg, 1e-9) {
            return Err(domain("functional is not in the negative normal cone at the base point"));
        }
        self.functional = Some(phi.to_vec());
        Ok(self)
    }

    pub fn set(&self) -> &AdmissibleSet {
        self.set
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn functional(&self) -> Option<&[f64]> {
        self.functional.as_deref()
    }

    /// Rows M with T_C(x) = {h : M h ≤ 0}.
    pub fn tangent_rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Rows describing the critical cone T_C(x) ∩ φ^⊥.
    pub fn critical_rows(&self) -> Result<Vec<Vec<f64>>> {
        let phi = self.functional.as_ref().ok_or_else(|| structural("critical cone needs a functional"))?;
        let mut rows = self.rows.clone();
        if norm2(phi) > 0.0 {
            rows.push(phi.clone());
            rows.push(phi.iter().map(|v| -v).collect());
        }
        Ok(rows)
    }

    /// Euclidean projection onto the critical cone.
    pub fn project_critical(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(project_onto_polyhedral_cone(&self.critical_rows()?, v))
    }

    /// Euclidean projection onto the tangent cone.
    pub fn project_tangent(&self, v: &[f64]) -> Vec<f64> {
        project_onto_polyhedral_cone(&self.rows, v)
    }
}

fn within_rows(rows: &[Vec<f64>], h: &[f64]) -> bool {
    let nh = norm2(h);
    rows.iter().all(|r| dot(r, h) <= CONE_TOL * norm2(r) * nh)
}

pub fn tangent_cone_membership(q: &ConeQuery<'_>, h: &[f64]) -> Result<bool> {
    q.set.check_dim(h)?;
    Ok(within_rows(&q.rows, h))
}

pub fn radial_cone_membership(q: &ConeQuery<'_>, h: &[f64]) -> Result<bool> {
    q.set.check_dim(h)?;
    q.set.radial_contains(&q.base, h)
}

/// φ ∈ N_C(x), i.e. ⟨φ, h⟩ ≤ 0 for every tangent h.
pub fn normal_cone_membership(q: &ConeQuery<'_>, phi: &[f64]) -> Result<bool> {
    q.set.check_dim(phi)?;
    Ok(in_conic_hull(&q.rows, phi, 1e-9))
}

/// h ∈ T_C(x) and |⟨φ, h⟩| ≤ tol·‖φ‖·‖h‖.
pub fn critical_cone_membership(q: &ConeQuery<'_>, h: &[f64], tol: f64) -> Result<bool> {
    let phi = q.functional.as_ref().ok_or_else(|| structural("critical cone needs a functional"))?;
    if !tangent_cone_membership(q, h)? {
        return Ok(false);
    }
    Ok(dot(phi, h).abs() <= tol * norm2(phi) * norm2(h))
}

/// A tangent direction h with ⟨φ, h⟩ < 0 when φ ∉ −N_C(x); `None` otherwise.
pub fn descent_witness(q: &ConeQuery<'_>, phi: &[f64]) -> Result<Option<Vec<f64>>> {
    q.set.check_dim(phi)?;
    let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
    let h = q.project_tangent(&neg);
    let slope = dot(phi, &h);
    if slope < -1e-12 * (1.0 + norm2(phi)).powi(2) {
        Ok(Some(h))
    } else {
        Ok(None)
    }
}

/// Descriptor of a second-order tangent set T²_K(z, h).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SecondOrderTangentSet {
    AllSpace { dim: usize },
    /// (−∞, 0] ⊂ R.
    HalfLineNonPos,
    /// {r : M r ≤ 0} with at least one row.
    PolyhedralCone { rows: Vec<Vec<f64>> },
    /// {r : ⟨normal, r⟩ ≤ bound}, the shifted cone arising from curved boundaries.
    HalfSpace { normal: Vec<f64>, bound: f64 },
    Empty,
}

impl SecondOrderTangentSet {
    pub fn contains(&self, r: &[f64], tol: f64) -> bool {
        match self {
            SecondOrderTangentSet::AllSpace { .. } => true,
            SecondOrderTangentSet::HalfLineNonPos => r[0] <= tol,
            SecondOrderTangentSet::PolyhedralCone { rows } => {
                rows.iter().all(|row| dot(row, r) <= tol * (1.0 + norm2(row) * norm2(r)))
            }
            SecondOrderTangentSet::HalfSpace { normal, bound } => dot(normal, r) <= bound + tol,
            SecondOrderTangentSet::Empty => false,
        }
    }

    /// inf over the set of ⟨φ, r⟩.
    pub fn inf_linear(&self, phi: &[f64]) -> CurvatureKind {
        let zero = norm2(phi) == 0.0;
        match self {
            SecondOrderTangentSet::Empty => CurvatureKind::PlusInfinity,
            SecondOrderTangentSet::AllSpace { .. } => {
                if zero {
                    CurvatureKind::Finite(0.0)
                } else {
                    CurvatureKind::MinusInfinity
                }
            }
            SecondOrderTangentSet::HalfLineNonPos => {
                if phi[0] <= 0.0 {
                    CurvatureKind::Finite(0.0)
                } else {
                    CurvatureKind::MinusInfinity
                }
            }
            SecondOrderTangentSet::PolyhedralCone { rows } => {
                let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
                if in_conic_hull(rows, &neg, 1e-9) {
                    CurvatureKind::Finite(0.0)
                } else {
                    CurvatureKind::MinusInfinity
                }
            }
            SecondOrderTangentSet::HalfSpace { normal, bound } => {
                if zero {
                    return CurvatureKind::Finite(0.0);
                }
                // ⟨φ, r⟩ is bounded below on the half-space iff φ = −μ·normal with μ ≥ 0.
                let nn = dot(normal, normal);
                let mu = -dot(phi, normal) / nn;
                let resid: f64 = phi
                    .iter()
                    .zip(normal)
                    .map(|(p, a)| (p + mu * a).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if mu >= 0.0 && resid <= 1e-9 * norm2(phi) {
                    CurvatureKind::Finite(-mu * bound)
                } else {
                    CurvatureKind::MinusInfinity
                }
            }
        }
    }
}

/// T²_K(z, h) for the canonical convex sets. Requires z ∈ K and h ∈ T_K(z).
pub fn second_order_tangent_set(k: &ConvexSet, z: &[f64], h: &[f64]) -> Result<SecondOrderTangentSet> {
    k.validate()?;
    let n = k.dim();
    if z.len() != n || h.len() != n {
        return Err(structural(format!("expected vectors of length {n}")));
    }
    let tol = crate::model::ANALYTIC_FEASIBILITY_TOL;
    if !k.contains(z, tol) {
        return Err(domain("base point is not in K"));
    }
    let rows = k.tangent_rows(z, tol);
    if !within_rows(&rows, h) {
        return Err(domain("direction is not tangent to K at the base point"));
    }
    let nh = norm2(h);
    let active: Vec<Vec<f64>> = rows
        .into_iter()
        .filter(|r| dot(r, h) >= -CONE_TOL * norm2(r) * nh)
        .collect();
    Ok(match k {
        ConvexSet::NonPositive => {
            if active.is_empty() {
                SecondOrderTangentSet::AllSpace { dim: 1 }
            } else {
                SecondOrderTangentSet::HalfLineNonPos
            }
        }
        ConvexSet::Box { .. } | ConvexSet::Polyhedral { .. } => {
            if active.is_empty() {
                SecondOrderTangentSet::AllSpace { dim: n }
            } else {
                SecondOrderTangentSet::PolyhedralCone { rows: active }
            }
        }
        ConvexSet::UnitBall { .. } => {
            if active.is_empty() {
                SecondOrderTangentSet::AllSpace { dim: n }
            } else {
                SecondOrderTangentSet::HalfSpace { normal: z.to_vec(), bound: -dot(h, h) }
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SorVerdict {
    Ok,
    Violated,
}

#[derive(Debug, Clone, Serialize)]
pub struct SorReport {
    pub verdict: SorVerdict,
    /// (t, dist(x + t h, C) / t²)
    pub ratios: Vec<(f64, f64)>,
}

/// Growth factor of dist/t² over the schedule that flags a violation.
pub const SOR_DIVERGENCE_FACTOR: f64 = 1e3;

/// Default schedule t = 2⁻ᵏ, k = 1..30.
pub fn default_sor_schedule() -> Vec<f64> {
    (1..=30).map(|k| 0.5f64.powi(k)).collect()
}

/// Checks dist(x + t h, C) = O(t²) along the schedule.
pub fn sor_necessary_check(set: &AdmissibleSet, x: &[f64], h: &[f64], schedule: &[f64]) -> Result<SorReport> {
    if matches!(set, AdmissibleSet::LevelSet(_)) {
        return Err(unsupported("distance to a general level set"));
    }
    let q = ConeQuery::new(set, x)?;
    if !tangent_cone_membership(&q, h)? {
        return Err(domain("direction is not tangent"));
    }
    if schedule.is_empty() {
        return Err(structural("empty t schedule"));
    }
    let mut ratios = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let d: Vec<f64> = h.iter().map(|v| t * v).collect();
        let dist = set.distance_at_offset(x, &d)?;
        ratios.push((t, dist / (t * t)));
    }
    let base = ratios[0].1.max(1e-12 * (1.0 + dot(h, h)));
    let worst = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let verdict = if worst > SOR_DIVERGENCE_FACTOR * base {
        SorVerdict::Violated
    } else {
        SorVerdict::Ok
    };
    Ok(SorReport { verdict, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Side;

    fn square() -> AdmissibleSet {
        AdmissibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn box_tangent_cone() {
        let c = square();
        let q = ConeQuery::new(&c, &[1.0, 0.0]).unwrap();
        assert!(tangent_cone_membership(&q, &[-1.0, 7.0]).unwrap());
        assert!(!tangent_cone_membership(&q, &[1.0, 0.0]).unwrap());
    }

    #[test]
    fn power_epigraph_tangent_at_origin() {
        let c = AdmissibleSet::power_epigraph(1.5, Side::Above).unwrap();
        let q = ConeQuery::new(&c, &[0.0, 0.0]).unwrap();
        assert!(tangent_cone_membership(&q, &[1.0, 0.0]).unwrap());
        assert!(!radial_cone_membership(&q, &[1.0, 0.0]).unwrap());
        assert!(normal_cone_membership(&q, &[0.0, -3.0]).unwrap());
        assert!(!normal_cone_membership(&q, &[1.0, -3.0]).unwrap());
    }

    #[test]
    fn box_normal_cone_1d() {
        let c = AdmissibleSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        let q = ConeQuery::new(&c, &[1.0]).unwrap();
        assert!(normal_cone_membership(&q, &[2.0]).unwrap());
        assert!(!normal_cone_membership(&q, &[-2.0]).unwrap());
    }

    #[test]
    fn level_set_requires_constraint_qualification() {
        use crate::model::{FnConstraintMap, LevelSet};
        use std::sync::Arc;
        let ls = LevelSet::new(Arc::new(FnConstraintMap::unit_sphere(2)), ConvexSet::NonPositive, false).unwrap();
        let c = AdmissibleSet::LevelSet(ls);
        assert!(matches!(ConeQuery::new(&c, &[1.0, 0.0]), Err(crate::Error::Refusal(_))));
    }

    #[test]
    fn critical_cone_of_power_epigraph() {
        let c = AdmissibleSet::power_epigraph(1.5, Side::Above).unwrap();
        let q = ConeQuery::new(&c, &[0.0, 0.0]).unwrap().with_functional(&[0.0, 2.0]).unwrap();
        assert!(critical_cone_membership(&q, &[1.0, 0.0], 1e-12).unwrap());
        assert!(!critical_cone_membership(&q, &[0.0, 1.0], 1e-12).unwrap());
        let q = ConeQuery::new(&c, &[0.0, 0.0]).unwrap();
        assert!(critical_cone_membership(&q, &[1.0, 0.0], 1e-12).is_err());
    }

    #[test]
    fn zero_functional_critical_equals_tangent() {
        let c = AdmissibleSet::boxed(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let q = ConeQuery::new(&c, &[1.0, -1.0, 0.2]).unwrap().with_functional(&[0.0; 3]).unwrap();
        for h in [[-1.0, 1.0, 5.0], [0.0, 0.0, -2.0], [-0.3, 0.0, 0.0]] {
            assert!(critical_cone_membership(&q, &h, 1e-12).unwrap());
        }
        assert!(!critical_cone_membership(&q, &[1.0, 0.0, 0.0], 1e-12).unwrap());
    }

    #[test]
    fn witness_for_interior_point() {
        let c = AdmissibleSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        let q = ConeQuery::new(&c, &[0.5]).unwrap();
        let h = descent_witness(&q, &[1.0]).unwrap().unwrap();
        assert!(h[0] < 0.0);
        let q = ConeQuery::new(&c, &[1.0]).unwrap();
        assert!(descent_witness(&q, &[-2.0]).unwrap().is_none());
    }

    #[test]
    fn ball_second_order_set() {
        let k = ConvexSet::UnitBall { dim: 2 };
        let s = second_order_tangent_set(&k, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(s, SecondOrderTangentSet::HalfSpace { normal: vec![1.0, 0.0], bound: -1.0 });
        assert!(s.contains(&[-1.0, 3.0], 0.0));
        assert!(!s.contains(&[-0.9, 0.0], 0.0));
        assert_eq!(s.inf_linear(&[-2.0, 0.0]), CurvatureKind::Finite(2.0));
        assert_eq!(s.inf_linear(&[-2.0, 1.0]), CurvatureKind::MinusInfinity);
    }

    /// Brute-force oracle: r belongs to T² iff dist(z + t h + ½t² r, K)/t² → 0.
    #[test]
    fn ball_second_order_set_matches_distance_oracle() {
        let k = ConvexSet::UnitBall { dim: 2 };
        let z = [1.0, 0.0];
        let h = [0.0, 1.0];
        let s = second_order_tangent_set(&k, &z, &h).unwrap();
        for i in -8..=8 {
            for j in -4..=4 {
                let r = [-1.0 + 0.1 * i as f64, 0.5 * j as f64];
                if (r[0] + 1.0).abs() < 0.05 {
                    continue;
                }
                let ratio = |t: f64| {
                    let d = [t * h[0] + 0.5 * t * t * r[0], t * h[1] + 0.5 * t * t * r[1]];
                    k.distance_at_offset(&z, &d) / (t * t)
                };
                let vanishing = ratio(2f64.powi(-14)) < 1e-3 && ratio(2f64.powi(-16)) <= ratio(2f64.powi(-12));
                assert_eq!(vanishing, s.contains(&r, 0.0), "r = {r:?}");
            }
        }
    }

    #[test]
    fn second_order_requires_tangent_direction() {
        let k = ConvexSet::NonPositive;
        assert!(second_order_tangent_set(&k, &[0.0], &[1.0]).is_err());
        assert!(second_order_tangent_set(&k, &[0.5], &[0.0]).is_err());
    }

    #[test]
    fn polyhedral_second_order_set() {
        let k = ConvexSet::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
        let s = second_order_tangent_set(&k, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(s, SecondOrderTangentSet::PolyhedralCone { rows: vec![vec![1.0, 0.0]] });
        let s = second_order_tangent_set(&k, &[1.0, 0.0], &[-1.0, 1.0]).unwrap();
        assert_eq!(s, SecondOrderTangentSet::AllSpace { dim: 2 });
    }

    #[test]
    fn sor_check_cases() {
        let c = square();
        let r = sor_necessary_check(&c, &[0.0, 0.0], &[3.0, -1.0], &default_sor_schedule()).unwrap();
        assert_eq!(r.verdict, SorVerdict::Ok);
        assert!(r.ratios.iter().skip(3).all(|(_, v)| *v == 0.0));

        let c = AdmissibleSet::power_epigraph(1.5, Side::Above).unwrap();
        let r = sor_necessary_check(&c, &[0.0, 0.0], &[1.0, 0.0], &default_sor_schedule()).unwrap();
        assert_eq!(r.verdict, SorVerdict::Violated);

        let c = AdmissibleSet::Convex(ConvexSet::UnitBall { dim: 2 });
        let r = sor_necessary_check(&c, &[1.0, 0.0], &[0.0, 1.0], &default_sor_schedule()).unwrap();
        assert_eq!(r.verdict, SorVerdict::Ok);
        let last = r.ratios.last().unwrap().1;
        assert!((last - 0.5).abs() < 1e-6);
    }

    #[test]
    fn sor_check_power_epigraph_distance_scaling() {
        // Closed form: for small t, dist((t,0), graph) ≈ t^α.
        let c = AdmissibleSet::power_epigraph(1.5, Side::Above).unwrap();
        let t = 1e-6f64;
        let d = c.distance_at_offset(&[0.0, 0.0], &[t, 0.0]).unwrap();
        assert!((d / t.powf(1.5) - 1.0).abs() < 1e-3);
    }
}
