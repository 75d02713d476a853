//! First- and second-order optimality checks at a candidate point: FONC, the NDC
//! criteria, SNC residuals, SSC, empirical quadratic growth and the combined no-gap
//! verdict.

mod directions;
mod growth;
mod report;

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cones::{descent_witness, normal_cone_membership, ConeQuery};
use crate::curvature::{
    curvature_brute_force, curvature_closed_form, curvature_pullback, CurvatureConfig, CurvatureKind,
    CurvatureValue,
};
use crate::error::{structural, Error, Result};
use crate::model::{AdmissibleSet, Norm, Objective};

pub use directions::{critical_directions, sphere_points};
pub use growth::{growth_sample, trimmed_min, GrowthConfig, GrowthReport, GrowthSample, SamplerTag};
pub(crate) use growth::assemble as assemble_growth;
pub use report::{no_gap_report, render_verdict, SocReport, Verdict};

/// Threshold for strict positivity in the SSC.
pub const SSC_POSITIVITY_TOL: f64 = 1e-9;
/// Slack below zero tolerated for SNC residuals before growth and SNC are flagged as
/// contradicting each other.
pub const SNC_RESIDUAL_TOL: f64 = 1e-6;

/// Candidate point of `min J(x) s.t. x ∈ C`.
#[derive(Clone)]
pub struct Problem {
    pub set: AdmissibleSet,
    pub objective: Arc<dyn Objective>,
    pub point: Vec<f64>,
    pub norm: Norm,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("set", &self.set).field("point", &self.point).finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(set: AdmissibleSet, objective: Arc<dyn Objective>, point: Vec<f64>) -> Result<Self> {
        set.check_dim(&point)?;
        if objective.dim() != point.len() {
            return Err(structural(format!(
                "objective has dimension {} but the point has {} entries",
                objective.dim(),
                point.len()
            )));
        }
        Ok(Self { set, objective, point, norm: Norm::Euclidean })
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.objective.gradient(&self.point)
    }
}

/// How Q(h) is evaluated in the SNC/SSC scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureStrategy {
    /// Closed form where one exists, brute force otherwise.
    #[default]
    Auto,
    BruteForce,
    ClosedForm,
    /// Pullback formula for level sets with the given multiplier.
    Pullback { multiplier: Vec<f64> },
}

/// Which hypothesis of the necessary condition the caller asserts; recorded, not checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SncHypothesis {
    #[default]
    WeakStarUsc,
    Mrc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SocConfig {
    /// Number of low-discrepancy sphere samples projected onto the critical cone.
    pub directions: usize,
    /// Additional directions, projected onto the critical cone like the samples.
    pub extra_directions: Vec<Vec<f64>>,
    pub strategy: CurvatureStrategy,
    pub curvature: CurvatureConfig,
    pub growth: GrowthConfig,
    /// Skip the growth sampler.
    pub skip_growth: bool,
    pub snc_hypothesis: SncHypothesis,
}

impl Default for SocConfig {
    fn default() -> Self {
        Self {
            directions: 16,
            extra_directions: Vec::new(),
            strategy: CurvatureStrategy::Auto,
            curvature: CurvatureConfig::default(),
            growth: GrowthConfig::default(),
            skip_growth: false,
            snc_hypothesis: SncHypothesis::WeakStarUsc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FoncResult {
    Holds,
    /// Tangent direction with ⟨J′(x̄), h⟩ < 0.
    Fails { witness: Vec<f64>, slope: f64 },
}

impl FoncResult {
    pub fn holds(&self) -> bool {
        matches!(self, FoncResult::Holds)
    }
}

/// J′(x̄) ∈ −N_C(x̄).
pub fn fonc_check(set: &AdmissibleSet, obj: &dyn Objective, x: &[f64]) -> Result<FoncResult> {
    let q = ConeQuery::new(set, x)?;
    let g = obj.gradient(x);
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    if normal_cone_membership(&q, &neg)? {
        return Ok(FoncResult::Holds);
    }
    match descent_witness(&q, &g)? {
        Some(h) => {
            let slope = crate::linalg::dot(&g, &h);
            Ok(FoncResult::Fails { witness: h, slope })
        }
        // Membership failed only within round-off of the witness test.
        None => Ok(FoncResult::Holds),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NdcCriterion {
    /// Ellipticity of J″(x̄).
    A,
    /// First-order growth ⟨J′(x̄), x − x̄⟩ ≥ (c/2)‖x − x̄‖².
    C,
    /// Finite-dimensional space.
    D,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NdcResult {
    EstablishedVia {
        criteria: Vec<NdcCriterion>,
        min_eigenvalue: Option<f64>,
        first_order_c: Option<f64>,
    },
    Unverified {
        min_eigenvalue: Option<f64>,
        first_order_c: Option<f64>,
    },
}

impl NdcResult {
    pub fn established(&self) -> bool {
        matches!(self, NdcResult::EstablishedVia { .. })
    }

    pub fn first_order_c(&self) -> Option<f64> {
        match self {
            NdcResult::EstablishedVia { first_order_c, .. } | NdcResult::Unverified { first_order_c, .. } => *first_order_c,
        }
    }
}

/// Dimension above which the Hessian is not assembled for the ellipticity test.
const ELLIPTICITY_MAX_DIM: usize = 400;

/// Smallest eigenvalue of the matrix of J″(x̄) in the problem norm's inner product.
pub fn hessian_min_eigenvalue(obj: &dyn Objective, x: &[f64], norm: &Norm) -> Result<f64> {
    let n = x.len();
    if n > ELLIPTICITY_MAX_DIM {
        return Err(crate::error::unsupported("Hessian too large to assemble"));
    }
    let mut e = vec![vec![0.0; n]; n];
    for (i, row) in e.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let w: Vec<f64> = match norm {
        Norm::WeightedL2(w) => w.to_vec(),
        _ => vec![1.0; n],
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = obj.hessian_form(x, &e[i], &e[j]) / (w[i] * w[j]).sqrt();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Sufficient criteria for the non-degeneracy condition. Finite-dimensional analytic
/// sets pass automatically; ellipticity is tested when the Hessian is small enough to
/// assemble; first-order growth is supplied by samplers that measure it (bang-bang).
pub fn ndc_check(problem: &Problem, first_order_c: Option<f64>) -> NdcResult {
    let mut criteria = Vec::new();
    let min_eigenvalue = hessian_min_eigenvalue(problem.objective.as_ref(), &problem.point, &problem.norm).ok();
    if min_eigenvalue.is_some_and(|l| l > SSC_POSITIVITY_TOL) {
        criteria.push(NdcCriterion::A);
    }
    if first_order_c.is_some_and(|c| c > 0.0) {
        criteria.push(NdcCriterion::C);
    }
    if !matches!(problem.set, AdmissibleSet::BangBangBox { .. }) {
        criteria.push(NdcCriterion::D);
    }
    if criteria.is_empty() {
        NdcResult::Unverified { min_eigenvalue, first_order_c }
    } else {
        NdcResult::EstablishedVia { criteria, min_eigenvalue, first_order_c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureRecord {
    pub label: String,
    /// Critical direction, normalized to unit length in the problem norm.
    pub direction: Vec<f64>,
    pub curvature: CurvatureValue,
    /// J″(x̄)h².
    pub hessian_term: f64,
}

impl CurvatureRecord {
    /// Q(h) + J″(x̄)h².
    pub fn second_order_value(&self) -> CurvatureKind {
        self.curvature.value.plus(self.hessian_term)
    }
}

/// Unit critical directions (problem norm) for J′(x̄), or an empty list when the critical
/// cone is {0}.
pub fn scan_directions(problem: &Problem, cfg: &SocConfig) -> Result<Vec<Vec<f64>>> {
    let g = problem.gradient();
    let q = ConeQuery::new(&problem.set, &problem.point)?.with_functional(&g)?;
    let mut dirs = critical_directions(&q, cfg.directions)?;
    for v in &cfg.extra_directions {
        problem.set.check_dim(v)?;
        let p = q.project_critical(v)?;
        let np = crate::linalg::norm2(&p);
        if np > 1e-8 {
            let u: Vec<f64> = p.iter().map(|c| c / np).collect();
            if dirs.iter().all(|w| crate::linalg::dot(w, &u) < 1.0 - 1e-9) {
                dirs.push(u);
            }
        }
    }
    dirs.iter()
        .map(|d| {
            let nd = problem.norm.eval(d)?;
            Ok(d.iter().map(|c| c / nd).collect())
        })
        .collect()
}

fn curvature_at(problem: &Problem, phi: &[f64], h: &[f64], cfg: &SocConfig) -> Result<CurvatureValue> {
    let (set, x) = (&problem.set, problem.point.as_slice());
    match &cfg.strategy {
        CurvatureStrategy::BruteForce => curvature_brute_force(set, x, phi, h, &cfg.curvature),
        CurvatureStrategy::ClosedForm => curvature_closed_form(set, x, phi, h),
        CurvatureStrategy::Auto => match curvature_closed_form(set, x, phi, h) {
            Err(Error::Unsupported(_)) => curvature_brute_force(set, x, phi, h, &cfg.curvature),
            other => other,
        },
        CurvatureStrategy::Pullback { multiplier } => match set {
            AdmissibleSet::LevelSet(ls) => curvature_pullback(ls, x, phi, multiplier, h),
            _ => Err(crate::error::unsupported("the pullback formula applies to level sets only")),
        },
    }
}

/// Q(h) and J″(x̄)h² along each direction.
pub fn curvature_scan(problem: &Problem, dirs: &[Vec<f64>], cfg: &SocConfig) -> Result<Vec<CurvatureRecord>> {
    let phi = problem.gradient();
    dirs.iter()
        .enumerate()
        .map(|(i, h)| {
            let curvature = curvature_at(problem, &phi, h, cfg)?;
            let hessian_term = problem.objective.hessian_form(&problem.point, h, h);
            Ok(CurvatureRecord { label: format!("h{i}"), direction: h.clone(), curvature, hessian_term })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SncResidual {
    pub label: String,
    pub c: f64,
    /// Q(h) + J″(x̄)h² − c‖h‖².
    pub residual: CurvatureKind,
    pub inconclusive: bool,
}

/// SNC residuals at growth constant c from precomputed curvature records.
pub fn snc_residuals(records: &[CurvatureRecord], c: f64, norm: &Norm) -> Result<Vec<SncResidual>> {
    records
        .iter()
        .map(|r| {
            let nh = norm.eval(&r.direction)?;
            let residual = r.second_order_value().plus(-c * nh * nh);
            Ok(SncResidual {
                label: r.label.clone(),
                c,
                residual,
                inconclusive: matches!(residual, CurvatureKind::Unresolved),
            })
        })
        .collect()
}

/// SNC residuals Q(h) + J″(x̄)h² − c‖h‖² along the given directions.
pub fn snc_scan(problem: &Problem, c: f64, dirs: &[Vec<f64>], cfg: &SocConfig) -> Result<Vec<SncResidual>> {
    if !(c >= 0.0) {
        return Err(structural("growth constant must be nonnegative"));
    }
    let records = curvature_scan(problem, dirs, cfg)?;
    snc_residuals(&records, c, &problem.norm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SscResult {
    /// `advisory` is set when the NDC could not be established.
    Holds { vacuous: bool, advisory: bool },
    Fails { witness: Vec<f64>, value: CurvatureKind, advisory: bool },
    Inconclusive { reason: String },
}

impl SscResult {
    pub fn holds(&self) -> bool {
        matches!(self, SscResult::Holds { .. })
    }

    pub fn fails(&self) -> bool {
        matches!(self, SscResult::Fails { .. })
    }

    pub fn advisory(&self) -> bool {
        match self {
            SscResult::Holds { advisory, .. } | SscResult::Fails { advisory, .. } => *advisory,
            SscResult::Inconclusive { .. } => true,
        }
    }
}

/// Strict positivity of Q(h) + J″(x̄)h² over precomputed records.
pub fn ssc_from_records(records: &[CurvatureRecord], ndc_established: bool) -> SscResult {
    let advisory = !ndc_established;
    let mut unresolved = None;
    for r in records {
        let v = r.second_order_value();
        match v {
            CurvatureKind::PlusInfinity => {}
            CurvatureKind::Unresolved => {
                unresolved.get_or_insert_with(|| r.label.clone());
            }
            CurvatureKind::MinusInfinity => {
                return SscResult::Fails { witness: r.direction.clone(), value: v, advisory };
            }
            CurvatureKind::Finite(x) => {
                if x <= SSC_POSITIVITY_TOL {
                    return SscResult::Fails { witness: r.direction.clone(), value: v, advisory };
                }
            }
        }
    }
    match unresolved {
        Some(label) => SscResult::Inconclusive { reason: format!("curvature unresolved along {label}") },
        None => SscResult::Holds { vacuous: records.is_empty(), advisory },
    }
}

/// SSC over the given directions; the result is advisory unless the NDC is established.
pub fn ssc_check(problem: &Problem, dirs: &[Vec<f64>], cfg: &SocConfig, ndc: &NdcResult) -> Result<SscResult> {
    let records = curvature_scan(problem, dirs, cfg)?;
    Ok(ssc_from_records(&records, ndc.established()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnObjective, LevelSet, FnConstraintMap, ConvexSet, Side};

    fn quad1(c: f64) -> Arc<dyn Objective> {
        Arc::new(FnObjective::quadratic(vec![vec![2.0 * c]], vec![0.0]))
    }

    #[test]
    fn fonc_box_examples() {
        let b = AdmissibleSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        assert!(fonc_check(&b, quad1(-1.0).as_ref(), &[1.0]).unwrap().holds());
        match fonc_check(&b, quad1(1.0).as_ref(), &[0.5]).unwrap() {
            FoncResult::Fails { witness, slope } => {
                assert!(witness[0] < 0.0);
                assert!(slope < 0.0);
            }
            FoncResult::Holds => panic!("interior point with nonzero gradient"),
        }
    }

    #[test]
    fn fonc_power_epigraph() {
        let c = AdmissibleSet::power_epigraph(1.5, Side::Above).unwrap();
        let j = FnObjective::new(2, |x| x[1] - x[0] * x[0], |x| vec![-2.0 * x[0], 1.0], |_, a, b| -2.0 * a[0] * b[0]);
        assert!(fonc_check(&c, &j, &[0.0, 0.0]).unwrap().holds());
    }

    #[test]
    fn ndc_criteria() {
        let b = AdmissibleSet::boxed(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let p = Problem::new(b, Arc::new(FnObjective::quadratic(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 2])), vec![0.0; 2]).unwrap();
        match ndc_check(&p, None) {
            NdcResult::EstablishedVia { criteria, min_eigenvalue, .. } => {
                assert_eq!(criteria, vec![NdcCriterion::A, NdcCriterion::D]);
                assert!((min_eigenvalue.unwrap() - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    fn ball_problem(lambda: f64) -> Problem {
        // J = −(λ−½)... chosen so that J′(x̄) = −2λ x̄ at x̄ = (1,0) and J″ = −I.
        let set = AdmissibleSet::LevelSet(
            LevelSet::new(Arc::new(FnConstraintMap::unit_sphere(2)), ConvexSet::NonPositive, true).unwrap(),
        );
        let a = 2.0 * lambda - 1.0;
        let j = FnObjective::new(
            2,
            move |x| -0.5 * (x[0] * x[0] + x[1] * x[1]) - a * x[0],
            move |x| vec![-x[0] - a, -x[1]],
            |_, u, v| -(u[0] * v[0] + u[1] * v[1]),
        );
        Problem::new(set, Arc::new(j), vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn ball_ssc_threshold_at_one_half() {
        let cfg = SocConfig::default();
        for (lambda, expect) in [(0.4, false), (0.75, true), (2.0, true)] {
            let p = ball_problem(lambda);
            let dirs = scan_directions(&p, &cfg).unwrap();
            assert_eq!(dirs.len(), 2);
            let ndc = ndc_check(&p, None);
            let ssc = ssc_check(&p, &dirs, &cfg, &ndc).unwrap();
            assert_eq!(ssc.holds(), expect, "λ={lambda}: {ssc:?}");
            let records = curvature_scan(&p, &dirs, &cfg).unwrap();
            for r in &records {
                let v = r.second_order_value().finite().unwrap();
                assert!((v - (2.0 * lambda - 1.0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn snc_zero_direction_and_scaling() {
        let p = ball_problem(1.0);
        let cfg = SocConfig::default();
        let res = snc_scan(&p, 0.5, &[vec![0.0, 1.0]], &cfg).unwrap();
        assert_eq!(res[0].residual, CurvatureKind::Finite(0.5));
        let rec = CurvatureRecord {
            label: "h".into(),
            direction: vec![0.0, 0.0],
            curvature: CurvatureValue {
                value: CurvatureKind::Finite(0.0),
                method: crate::curvature::CurvatureMethod::PolyhedricClosedForm,
                upper_bound_only: false,
                diagnostics: vec![],
            },
            hessian_term: 0.0,
        };
        assert_eq!(snc_residuals(&[rec], 3.0, &Norm::Euclidean).unwrap()[0].residual, CurvatureKind::Finite(0.0));
    }

    #[test]
    fn empty_critical_cone_is_vacuous() {
        let b = AdmissibleSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        let p = Problem::new(b, quad1(-1.0), vec![1.0]).unwrap();
        let dirs = scan_directions(&p, &SocConfig::default()).unwrap();
        assert!(dirs.is_empty());
        let ssc = ssc_check(&p, &dirs, &SocConfig::default(), &ndc_check(&p, None)).unwrap();
        assert_eq!(ssc, SscResult::Holds { vacuous: true, advisory: false });
    }
}
