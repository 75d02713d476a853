use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, unsupported, Error, Result};
use crate::linalg::{dot, mat_vec, norm2};
use crate::model::Grid;

/// A smooth constraint map G: Rⁿ → Rᵐ with first and second derivatives.
pub trait ConstraintMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
    /// G′(x) as m rows of length n.
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>>;
    /// G″(x)(a, b) ∈ Rᵐ.
    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> Vec<f64>;

    /// G(x + d). Small offsets go through the second-order expansion around x, which
    /// keeps the t²-scale information that is lost when forming x + d in floating point.
    /// The expansion is exact for quadratic maps.
    fn value_at_offset(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        if norm2(d) <= 1e-4 * (1.0 + norm2(x)) {
            let g = self.value(x);
            let jd = mat_vec(&self.jacobian(x), d);
            let hdd = self.hessian_form(x, d, d);
            g.iter()
                .zip(jd)
                .zip(hdd)
                .map(|((g, j), h)| g + j + 0.5 * h)
                .collect()
        } else {
            let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
            self.value(&y)
        }
    }
}

type VecFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;
type HessVecFn = dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// Constraint map assembled from closures.
#[derive(Clone)]
pub struct FnConstraintMap {
    dim_in: usize,
    dim_out: usize,
    value: Arc<VecFn>,
    jacobian: Arc<JacFn>,
    hessian: Arc<HessVecFn>,
}

impl FnConstraintMap {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        value: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
        hessian: impl Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim_in,
            dim_out,
            value: Arc::new(value),
            jacobian: Arc::new(jacobian),
            hessian: Arc::new(hessian),
        }
    }

    /// G(x) = ‖x‖² − 1 on Rⁿ.
    pub fn unit_sphere(n: usize) -> Self {
        Self::new(
            n,
            1,
            |x| vec![dot(x, x) - 1.0],
            |x| vec![x.iter().map(|v| 2.0 * v).collect()],
            |_, a, b| vec![2.0 * dot(a, b)],
        )
    }
}

impl ConstraintMap for FnConstraintMap {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.value)(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.jacobian)(x)
    }
    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
        (self.hessian)(x, a, b)
    }
}

/// Closed convex sets with exact membership, used as the target K of level sets
/// and, wrapped in [`AdmissibleSet::Convex`], as admissible sets in their own right.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// (−∞, 0] ⊂ R.
    NonPositive,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Closed Euclidean unit ball in R^dim.
    UnitBall { dim: usize },
    /// {z : A z ≤ b}.
    Polyhedral { a: Vec<Vec<f64>>, b: Vec<f64> },
}

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::NonPositive => 1,
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::UnitBall { dim } => *dim,
            ConvexSet::Polyhedral { a, .. } => a.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Box { lower, upper } => validate_box(lower, upper),
            ConvexSet::Polyhedral { a, b } => validate_polyhedron(a, b),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.distance(z) <= tol
    }

    pub fn distance(&self, z: &[f64]) -> f64 {
        self.distance_at_offset(&vec![0.0; z.len()], z)
    }

    /// dist(z + d, K), evaluated without forming z + d where the geometry allows.
    pub fn distance_at_offset(&self, z: &[f64], d: &[f64]) -> f64 {
        match self {
            ConvexSet::NonPositive => (z[0] + d[0]).max(0.0),
            ConvexSet::Box { lower, upper } => box_offset_distance(lower, upper, z, d),
            ConvexSet::UnitBall { .. } => {
                let y: Vec<f64> = z.iter().zip(d).map(|(a, b)| a + b).collect();
                let ny = norm2(&y);
                // ‖z+d‖² − 1 = (‖z‖² − 1) + 2⟨z,d⟩ + ‖d‖²
                let excess = (dot(z, z) - 1.0) + 2.0 * dot(z, d) + dot(d, d);
                (excess / (ny + 1.0)).max(0.0)
            }
            ConvexSet::Polyhedral { a, b } => {
                let y: Vec<f64> = z.iter().zip(d).map(|(p, q)| p + q).collect();
                norm2(&crate::linalg::sub(&y, &dykstra(a, b, &y)))
            }
        }
    }

    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        match self {
            ConvexSet::NonPositive => vec![z[0].min(0.0)],
            ConvexSet::Box { lower, upper } => clamp(z, lower, upper),
            ConvexSet::UnitBall { .. } => {
                let n = norm2(z);
                if n <= 1.0 {
                    z.to_vec()
                } else {
                    z.iter().map(|v| v / n).collect()
                }
            }
            ConvexSet::Polyhedral { a, b } => dykstra(a, b, z),
        }
    }

    /// Rows M with T_K(z) = {v : M v ≤ 0}; N_K(z) = cone(rows).
    pub fn tangent_rows(&self, z: &[f64], tol: f64) -> Vec<Vec<f64>> {
        match self {
            ConvexSet::NonPositive => {
                if z[0] >= -tol {
                    vec![vec![1.0]]
                } else {
                    Vec::new()
                }
            }
            ConvexSet::Box { lower, upper } => box_tangent_rows(lower, upper, z, tol),
            ConvexSet::UnitBall { .. } => {
                if norm2(z) >= 1.0 - tol {
                    vec![z.to_vec()]
                } else {
                    Vec::new()
                }
            }
            ConvexSet::Polyhedral { a, b } => a
                .iter()
                .zip(b)
                .filter(|(row, bi)| dot(row, z) >= *bi - tol * (1.0 + bi.abs()))
                .map(|(row, _)| row.clone())
                .collect(),
        }
    }
}

fn validate_box(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(structural("box bounds have different lengths"));
    }
    if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
        return Err(structural(format!("box lower bound exceeds upper bound at {i}")));
    }
    Ok(())
}

fn validate_polyhedron(a: &[Vec<f64>], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(structural("polyhedron: A and b have different row counts"));
    }
    let n = a.first().map_or(0, Vec::len);
    if a.iter().any(|r| r.len() != n) {
        return Err(structural("polyhedron: ragged constraint matrix"));
    }
    Ok(())
}

fn clamp(z: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(lower.iter().zip(upper))
        .map(|(v, (l, u))| v.clamp(*l, *u))
        .collect()
}

fn box_offset_distance(lower: &[f64], upper: &[f64], z: &[f64], d: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..z.len() {
        let hi = upper[i] - z[i];
        let lo = lower[i] - z[i];
        let e = (d[i] - hi).max(lo - d[i]).max(0.0);
        s += e * e;
    }
    s.sqrt()
}

fn box_tangent_rows(lower: &[f64], upper: &[f64], z: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let n = z.len();
    let mut rows = Vec::new();
    for i in 0..n {
        if z[i] >= upper[i] - tol {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            rows.push(r);
        }
        if z[i] <= lower[i] + tol {
            let mut r = vec![0.0; n];
            r[i] = -1.0;
            rows.push(r);
        }
    }
    rows
}

/// Dykstra's alternating projections onto {y : A y ≤ b}.
fn dykstra(a: &[Vec<f64>], b: &[f64], z: &[f64]) -> Vec<f64> {
    let m = a.len();
    let n = z.len();
    let mut x = z.to_vec();
    let mut corr = vec![vec![0.0; n]; m];
    for _ in 0..5000 {
        let prev = x.clone();
        for i in 0..m {
            let y: Vec<f64> = x.iter().zip(&corr[i]).map(|(p, q)| p + q).collect();
            let nn = dot(&a[i], &a[i]);
            let viol = dot(&a[i], &y) - b[i];
            let p: Vec<f64> = if viol > 0.0 && nn > 0.0 {
                y.iter().zip(&a[i]).map(|(v, ai)| v - viol / nn * ai).collect()
            } else {
                y.clone()
            };
            corr[i] = y.iter().zip(&p).map(|(u, v)| u - v).collect();
            x = p;
        }
        let change = norm2(&crate::linalg::sub(&x, &prev));
        if change <= 1e-15 * (1.0 + norm2(&x)) {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// x₂ ≥ |x₁|^α
    Above,
    /// x₂ ≤ |x₁|^α
    Below,
}

/// C = G⁻¹(K).
#[derive(Clone)]
pub struct LevelSet {
    pub map: Arc<dyn ConstraintMap>,
    pub cone: ConvexSet,
    /// Caller asserts the Zowe–Kurcyusz constraint qualification at the points queried.
    pub zkcq_asserted: bool,
}

impl LevelSet {
    pub fn new(map: Arc<dyn ConstraintMap>, cone: ConvexSet, zkcq_asserted: bool) -> Result<Self> {
        cone.validate()?;
        if map.dim_out() != cone.dim() {
            return Err(structural(format!(
                "constraint map has {} outputs but K lives in dimension {}",
                map.dim_out(),
                cone.dim()
            )));
        }
        Ok(Self { map, cone, zkcq_asserted })
    }

    /// Verifies the constraint qualification numerically for m ≤ 2 through its dual
    /// form: no nonzero y ∈ N_K(G(x)) with G′(x)ᵀ y = 0.
    pub fn verify_zkcq(&self, x: &[f64]) -> Result<bool> {
        let m = self.map.dim_out();
        if m > 2 {
            return Err(unsupported("constraint qualification check implemented for m ≤ 2"));
        }
        let z = self.map.value(x);
        let jac = self.map.jacobian(x);
        let normals = self.cone.tangent_rows(&z, 1e-10);
        let in_normal = |y: &[f64]| crate::linalg::in_conic_hull(&normals, y, 1e-9);
        // Kernel of G′(x)ᵀ (an m × m Gram-type problem, m ≤ 2).
        let jjt: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| dot(&jac[i], &jac[j])).collect())
            .collect();
        let scale = 1.0 + jjt.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let kernel: Vec<Vec<f64>> = match m {
            1 => {
                if jjt[0][0] <= 1e-12 * scale {
                    vec![vec![1.0]]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let det = jjt[0][0] * jjt[1][1] - jjt[0][1] * jjt[1][0];
                let tr = jjt[0][0] + jjt[1][1];
                if tr <= 1e-12 * scale {
                    vec![vec![1.0, 0.0], vec![0.0, 1.0]]
                } else if det.abs() <= 1e-12 * scale * scale {
                    // rank one: kernel spanned by a vector orthogonal to the nonzero row space
                    let (a, b) = if jjt[0][0] >= jjt[1][1] {
                        (jjt[0][0], jjt[0][1])
                    } else {
                        (jjt[1][0], jjt[1][1])
                    };
                    vec![vec![-b, a]]
                } else {
                    Vec::new()
                }
            }
        };
        if kernel.len() == m {
            // G′(x) = 0: need N_K(G(x)) = {0}, i.e. no active rows.
            return Ok(normals.is_empty());
        }
        for y in &kernel {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            if in_normal(y) || in_normal(&neg) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSet")
            .field("dim_in", &self.map.dim_in())
            .field("cone", &self.cone)
            .field("zkcq_asserted", &self.zkcq_asserted)
            .finish()
    }
}

/// The admissible set C.
#[derive(Debug, Clone)]
pub enum AdmissibleSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// {x : A x ≤ b}.
    Polyhedron { a: Vec<Vec<f64>>, b: Vec<f64> },
    LevelSet(LevelSet),
    /// {x ∈ R² : x₂ ≥ |x₁|^α} or {x ∈ R² : x₂ ≤ |x₁|^α}, α ∈ (1, 2).
    PowerEpigraph { alpha: f64, side: Side },
    /// Grid functions with values in [−1, 1].
    BangBangBox { grid: Grid },
    Convex(ConvexSet),
}

impl AdmissibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        validate_box(&lower, &upper)?;
        Ok(Self::Box { lower, upper })
    }

    pub fn polyhedron(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        validate_polyhedron(&a, &b)?;
        Ok(Self::Polyhedron { a, b })
    }

    pub fn power_epigraph(alpha: f64, side: Side) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(structural(format!("exponent {alpha} must lie strictly in (1, 2)")));
        }
        Ok(Self::PowerEpigraph { alpha, side })
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            AdmissibleSet::Box { lower, .. } => Some(lower.len()),
            AdmissibleSet::Polyhedron { a, .. } => a.first().map(Vec::len),
            AdmissibleSet::LevelSet(ls) => Some(ls.map.dim_in()),
            AdmissibleSet::PowerEpigraph { .. } => Some(2),
            AdmissibleSet::BangBangBox { grid } => Some(grid.len()),
            AdmissibleSet::Convex(k) => Some(k.dim()),
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            AdmissibleSet::PowerEpigraph { side, .. } => *side == Side::Above,
            // G⁻¹(K) is convex for the bundled quadratic maps only; do not claim it in general.
            AdmissibleSet::LevelSet(_) => false,
            _ => true,
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        matches!(
            self,
            AdmissibleSet::Box { .. }
                | AdmissibleSet::Polyhedron { .. }
                | AdmissibleSet::BangBangBox { .. }
                | AdmissibleSet::Convex(ConvexSet::Box { .. } | ConvexSet::Polyhedral { .. } | ConvexSet::NonPositive)
        )
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            AdmissibleSet::BangBangBox { .. } => super::GRID_FEASIBILITY_TOL,
            _ => super::ANALYTIC_FEASIBILITY_TOL,
        }
    }

    pub(crate) fn check_dim(&self, v: &[f64]) -> Result<()> {
        match self.dim() {
            Some(n) if n != v.len() => Err(structural(format!(
                "vector has length {} but the set lives in dimension {n}",
                v.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Membership with slack `tol` in each defining inequality.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if self.check_dim(x).is_err() {
            return false;
        }
        match self {
            AdmissibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            AdmissibleSet::Polyhedron { a, b } => a.iter().zip(b).all(|(r, bi)| dot(r, x) <= bi + tol),
            AdmissibleSet::LevelSet(ls) => ls.cone.contains(&ls.map.value(x), tol),
            AdmissibleSet::PowerEpigraph { alpha, side } => {
                let p = x[0].abs().powf(*alpha);
                match side {
                    Side::Above => x[1] >= p - tol,
                    Side::Below => x[1] <= p + tol,
                }
            }
            AdmissibleSet::BangBangBox { .. } => x.iter().all(|v| v.abs() <= 1.0 + tol),
            AdmissibleSet::Convex(k) => k.contains(x, tol),
        }
    }

    /// Violation of the defining inequalities at x + d (0 iff feasible), in the units of
    /// those inequalities. Evaluated relative to x wherever the variant allows it.
    pub fn violation_at_offset(&self, x: &[f64], d: &[f64]) -> f64 {
        match self {
            AdmissibleSet::Box { lower, upper } => box_violation(lower, upper, x, d),
            AdmissibleSet::Polyhedron { a, b } => a
                .iter()
                .zip(b)
                .map(|(r, bi)| (dot(r, d) - (bi - dot(r, x))).max(0.0))
                .fold(0.0, f64::max),
            AdmissibleSet::LevelSet(ls) => {
                let g = ls.map.value_at_offset(x, d);
                ls.cone.distance(&g)
            }
            AdmissibleSet::PowerEpigraph { alpha, side } => {
                let y0 = x[0] + d[0];
                let y1 = x[1] + d[1];
                let p = y0.abs().powf(*alpha);
                match side {
                    Side::Above => (p - y1).max(0.0),
                    Side::Below => (y1 - p).max(0.0),
                }
            }
            AdmissibleSet::BangBangBox { .. } => {
                let mut worst = 0.0f64;
                for (xi, di) in x.iter().zip(d) {
                    worst = worst.max((di - (1.0 - xi)).max((-1.0 - xi) - di).max(0.0));
                }
                worst
            }
            AdmissibleSet::Convex(k) => k.distance_at_offset(x, d),
        }
    }

    /// dist(x + d, C).
    pub fn distance_at_offset(&self, x: &[f64], d: &[f64]) -> Result<f64> {
        match self {
            AdmissibleSet::Box { lower, upper } => Ok(box_offset_distance(lower, upper, x, d)),
            AdmissibleSet::BangBangBox { grid } => {
                let n = grid.len();
                Ok(box_offset_distance(&vec![-1.0; n], &vec![1.0; n], x, d))
            }
            AdmissibleSet::Convex(k) => Ok(k.distance_at_offset(x, d)),
            AdmissibleSet::Polyhedron { a, b } => {
                let y: Vec<f64> = x.iter().zip(d).map(|(p, q)| p + q).collect();
                Ok(norm2(&crate::linalg::sub(&y, &dykstra(a, b, &y))))
            }
            AdmissibleSet::PowerEpigraph { alpha, side } => {
                let y = [x[0] + d[0], x[1] + d[1]];
                if self.contains(&y, 0.0) {
                    return Ok(0.0);
                }
                let p = graph_nearest(y, *alpha, *side);
                Ok(((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)).sqrt())
            }
            AdmissibleSet::LevelSet(_) => Err(unsupported("distance to a general level set")),
        }
    }

    /// Euclidean projection onto C.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        match self {
            AdmissibleSet::Box { lower, upper } => Ok(clamp(y, lower, upper)),
            AdmissibleSet::BangBangBox { .. } => Ok(y.iter().map(|v| v.clamp(-1.0, 1.0)).collect()),
            AdmissibleSet::Polyhedron { a, b } => Ok(dykstra(a, b, y)),
            AdmissibleSet::Convex(k) => Ok(k.project(y)),
            AdmissibleSet::PowerEpigraph { alpha, side } => {
                if self.contains(y, 0.0) {
                    Ok(y.to_vec())
                } else {
                    Ok(graph_nearest([y[0], y[1]], *alpha, *side).to_vec())
                }
            }
            AdmissibleSet::LevelSet(_) => Err(unsupported("projection onto a general level set")),
        }
    }

    /// Rows M with T_C(x) = {h : M h ≤ 0}. Every variant handled here has a polyhedral
    /// tangent cone at every feasible point.
    pub fn tangent_rows(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(x)?;
        let tol = self.default_tolerance();
        if !self.contains(x, tol) {
            return Err(domain("base point is not feasible"));
        }
        Ok(match self {
            AdmissibleSet::Box { lower, upper } => box_tangent_rows(lower, upper, x, tol),
            AdmissibleSet::BangBangBox { grid } => {
                let n = grid.len();
                box_tangent_rows(&vec![-1.0; n], &vec![1.0; n], x, tol)
            }
            AdmissibleSet::Polyhedron { a, b } => ConvexSet::Polyhedral { a: a.clone(), b: b.clone() }
                .tangent_rows(x, tol),
            AdmissibleSet::Convex(k) => k.tangent_rows(x, tol),
            AdmissibleSet::PowerEpigraph { alpha, side } => {
                let p = x[0].abs().powf(*alpha);
                let active = (x[1] - p).abs() <= tol;
                if !active {
                    Vec::new()
                } else if x[0] == 0.0 {
                    match side {
                        Side::Above => vec![vec![0.0, -1.0]],
                        Side::Below => vec![vec![0.0, 1.0]],
                    }
                } else {
                    let dp = alpha * x[0].signum() * x[0].abs().powf(alpha - 1.0);
                    match side {
                        Side::Above => vec![vec![dp, -1.0]],
                        Side::Below => vec![vec![-dp, 1.0]],
                    }
                }
            }
            AdmissibleSet::LevelSet(ls) => {
                if !ls.zkcq_asserted {
                    return Err(Error::Refusal(
                        "tangent cone of a level set requires an asserted constraint qualification".into(),
                    ));
                }
                let z = ls.map.value(x);
                let jac = ls.map.jacobian(x);
                ls.cone
                    .tangent_rows(&z, tol)
                    .iter()
                    .map(|row| {
                        (0..x.len())
                            .map(|j| row.iter().zip(&jac).map(|(r, jr)| r * jr[j]).sum())
                            .collect()
                    })
                    .collect()
            }
        })
    }

    /// Radial cone membership: x + t h ∈ C for all sufficiently small t > 0.
    pub fn radial_contains(&self, x: &[f64], h: &[f64]) -> Result<bool> {
        let rows = self.tangent_rows(x)?;
        let scale = 1e-12 * (1.0 + norm2(h));
        let zero = norm2(h) == 0.0;
        Ok(match self {
            AdmissibleSet::Convex(ConvexSet::UnitBall { .. }) => {
                zero || rows.iter().all(|r| dot(r, h) < 0.0)
            }
            AdmissibleSet::PowerEpigraph { side: Side::Above, .. } => {
                zero || rows.iter().all(|r| dot(r, h) < 0.0)
            }
            AdmissibleSet::LevelSet(_) => {
                return Err(unsupported("radial cone of a general level set"));
            }
            _ => rows.iter().all(|r| dot(r, h) <= scale),
        })
    }
}

fn box_violation(lower: &[f64], upper: &[f64], x: &[f64], d: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let e = (d[i] - (upper[i] - x[i])).max((lower[i] - x[i]) - d[i]).max(0.0);
        worst = worst.max(e);
    }
    worst
}

/// Nearest point on the graph s ↦ (s, |s|^α) to an infeasible point p.
pub(crate) fn graph_nearest(p: [f64; 2], alpha: f64, _side: Side) -> [f64; 2] {
    let vertical = (p[0].abs().powf(alpha) - p[1]).abs();
    let dist2 = |s: f64| (s - p[0]).powi(2) + (s.abs().powf(alpha) - p[1]).powi(2);
    let (mut lo, mut hi) = (p[0] - vertical, p[0] + vertical);
    let samples = 256;
    let mut best = p[0];
    let mut best_val = dist2(best);
    for k in 0..=samples {
        let s = lo + (hi - lo) * k as f64 / samples as f64;
        let v = dist2(s);
        if v < best_val {
            best_val = v;
            best = s;
        }
    }
    let step = (hi - lo) / samples as f64;
    lo = best - step;
    hi = best + step;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if dist2(a) <= dist2(b) {
            hi = b;
        } else {
            lo = a;
        }
        if hi - lo <= 1e-18 * (1.0 + best.abs()) {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let s = if dist2(s) < best_val { s } else { best };
    [s, s.abs().powf(alpha)]
}
