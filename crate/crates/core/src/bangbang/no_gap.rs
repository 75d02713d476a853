use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_zero_set, level_set_constant, surface_curvature, AdjointField, LevelSetConstant, SurfaceMeasure, GRAD_FLOOR};
use crate::curvature::{CurvatureKind, CurvatureMethod, CurvatureValue};
use crate::error::Result;
use crate::linalg::Point2;
use crate::model::{Grid, Objective};
use crate::soc::{
    assemble_growth, render_verdict, trimmed_min, CurvatureRecord, FoncResult, GrowthConfig, GrowthReport,
    GrowthSample, NdcCriterion, NdcResult, SamplerTag, SncHypothesis, SncResidual, SocReport, SscResult,
    SSC_POSITIVITY_TOL,
};

pub type Kernel = Arc<dyn Fn(Point2, Point2) -> f64 + Send + Sync>;

/// Bang-bang problem J(x) = ⟨φ̄, x − x̄⟩ + ½ J″(x − x̄, x − x̄) over {|x| ≤ 1} with
/// x̄ = −sign φ̄ and J″(μ, ν) = ∬ k(s, t) dμ(s) dν(t) for an optional continuous kernel k.
#[derive(Clone)]
pub struct BangBangProblem {
    pub field: AdjointField,
    pub kernel: Option<Kernel>,
}

impl std::fmt::Debug for BangBangProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BangBangProblem")
            .field("field", &self.field)
            .field("kernel", &self.kernel.is_some())
            .finish()
    }
}

impl BangBangProblem {
    pub fn linear(field: AdjointField) -> Self {
        Self { field, kernel: None }
    }

    pub fn with_kernel(field: AdjointField, kernel: impl Fn(Point2, Point2) -> f64 + Send + Sync + 'static) -> Self {
        Self { field, kernel: Some(Arc::new(kernel)) }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    /// J″(x̄)(g·H|_Z)² = ∬ k g g dH dH by node quadrature; 0 without a kernel.
    pub fn hessian_surface(&self, sm: &SurfaceMeasure) -> Result<f64> {
        let g = sm.density()?;
        let Some(k) = &self.kernel else { return Ok(0.0) };
        let n = sm.len();
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut s = 0.0;
                for b in 0..n {
                    s += sm.weights[b] * g[b] * k(sm.nodes[a], sm.nodes[b]);
                }
                sm.weights[a] * g[a] * s
            })
            .collect();
        Ok(rows.iter().sum())
    }

    /// J(x) − J(x̄) for x = x̄ + δ with δ supported on the listed cells.
    fn increment(&self, cells: &[usize], delta: &[f64]) -> f64 {
        let grid = self.grid();
        let vol = grid.volumes();
        let phi = self.field.values();
        let mut first = 0.0;
        for (&i, d) in cells.iter().zip(delta) {
            first += phi[i] * d * vol[i];
        }
        let Some(k) = &self.kernel else { return first };
        let mut second = 0.0;
        for (&a, da) in cells.iter().zip(delta) {
            let pa = grid.node(a);
            for (&b, db) in cells.iter().zip(delta) {
                second += k(pa, grid.node(b)) * da * db * vol[a] * vol[b];
            }
        }
        first + 0.5 * second
    }

    /// The objective as a function of the grid vector, for derivative self-checks.
    pub fn objective(&self) -> GridObjective {
        GridObjective { problem: self.clone(), xbar: self.field.control() }
    }
}

/// [`BangBangProblem`]'s J on grid vectors, with the Euclidean gradient of the vector
/// representation (φ̄ weighted by cell volumes).
#[derive(Clone, Debug)]
pub struct GridObjective {
    problem: BangBangProblem,
    xbar: Vec<f64>,
}

impl GridObjective {
    fn kernel_apply(&self, k: &Kernel, v: &[f64]) -> Vec<f64> {
        let grid = self.problem.grid();
        let vol = grid.volumes();
        (0..v.len())
            .map(|a| {
                let pa = grid.node(a);
                vol[a] * (0..v.len()).map(|b| k(pa, grid.node(b)) * v[b] * vol[b]).sum::<f64>()
            })
            .collect()
    }
}

impl Objective for GridObjective {
    fn dim(&self) -> usize {
        self.xbar.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let grid = self.problem.grid();
        let d: Vec<f64> = x.iter().zip(&self.xbar).map(|(a, b)| a - b).collect();
        let first = grid.pair(self.problem.field.values(), &d);
        match &self.problem.kernel {
            None => first,
            Some(k) => first + 0.5 * crate::linalg::dot(&d, &self.kernel_apply(k, &d)),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let vol = self.problem.grid().volumes();
        let mut g: Vec<f64> = self.problem.field.values().iter().zip(vol).map(|(p, w)| p * w).collect();
        if let Some(k) = &self.problem.kernel {
            let d: Vec<f64> = x.iter().zip(&self.xbar).map(|(a, b)| a - b).collect();
            for (gi, ki) in g.iter_mut().zip(self.kernel_apply(k, &d)) {
                *gi += ki;
            }
        }
        g
    }

    fn hessian_form(&self, _x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        match &self.problem.kernel {
            None => 0.0,
            Some(k) => crate::linalg::dot(a, &self.kernel_apply(k, b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BangBangConfig {
    /// Largest band half-width for the level-set constant.
    pub s_max: f64,
    pub levels: usize,
    pub grad_floor: f64,
    pub growth: GrowthConfig,
    pub snc_hypothesis: SncHypothesis,
}

impl Default for BangBangConfig {
    fn default() -> Self {
        Self {
            s_max: 0.1,
            levels: 6,
            grad_floor: GRAD_FLOOR,
            growth: GrowthConfig::default(),
            snc_hypothesis: SncHypothesis::WeakStarUsc,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BangBangDetails {
    pub level_set: LevelSetConstant,
    pub zero_set_points: usize,
    pub zero_set_measure: f64,
    /// K(φ̄) is not positive: the surface inequality is only necessary.
    pub necessary_only: bool,
    /// Per-radius minimum of ⟨φ̄, u − x̄⟩/‖u − x̄‖₁² over the strip samples.
    pub first_order_by_radius: Vec<f64>,
    /// max(0, K/2 − first_order_by_radius), expected to shrink with the radius.
    pub deficits: Vec<f64>,
}

impl PartialEq for BangBangDetails {
    fn eq(&self, other: &Self) -> bool {
        serde_json::to_value(self).ok() == serde_json::to_value(other).ok()
    }
}

/// Growth samples from flipping bands of cells around the zero set, plus the first-order
/// ratios 2⟨φ̄, δ⟩/‖δ‖₁² of the same perturbations.
pub struct StripGrowth {
    pub report: GrowthReport,
    pub first_order: Vec<f64>,
    pub first_order_c: f64,
}

/// Draws perturbations δ = x − x̄ that flip x̄ on bands of cells where |φ̄| is smallest:
/// centred (both signs), one-sided, and offset (random split between the two sides).
/// ‖δ‖₁ ≤ ε for each radius ε.
pub fn strip_growth_sample(problem: &BangBangProblem, cfg: &GrowthConfig) -> Result<StripGrowth> {
    let grid = problem.grid();
    let phi = problem.field.values();
    let vol = grid.volumes();
    let by_abs = |list: &mut Vec<usize>| list.sort_by(|&a, &b| phi[a].abs().total_cmp(&phi[b].abs()).then(a.cmp(&b)));
    let mut all: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] != 0.0).collect();
    by_abs(&mut all);
    let pos: Vec<usize> = all.iter().copied().filter(|&i| phi[i] > 0.0).collect();
    let neg: Vec<usize> = all.iter().copied().filter(|&i| phi[i] < 0.0).collect();
    let cell = grid.cell_volume();
    let per_radius: Vec<(Vec<GrowthSample>, Vec<f64>)> = cfg
        .eps_schedule
        .par_iter()
        .enumerate()
        .map(|(ri, &eps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(ri as u64 + 1);
            let kmax = (eps / (2.0 * cell)).floor() as usize;
            let mut samples = Vec::new();
            let mut first = Vec::new();
            for s in 0..cfg.samples_per_radius {
                let u = if s < 3 { 1.0 } else { 0.5 + 0.5 * rng.gen::<f64>() };
                let k = ((kmax as f64) * u).floor() as usize;
                let (tag, cells): (SamplerTag, Vec<usize>) = match s % 3 {
                    0 => (SamplerTag::StripCentered, all.iter().take(k).copied().collect()),
                    1 => {
                        let side = if rng.gen::<bool>() { &pos } else { &neg };
                        (SamplerTag::StripOneSided, side.iter().take(k).copied().collect())
                    }
                    _ => {
                        let kp = (rng.gen::<f64>() * k as f64).round() as usize;
                        let mut c: Vec<usize> = pos.iter().take(kp).copied().collect();
                        c.extend(neg.iter().take(k - kp));
                        (SamplerTag::StripOffset, c)
                    }
                };
                if cells.is_empty() {
                    continue;
                }
                let delta: Vec<f64> = cells.iter().map(|&i| 2.0 * phi[i].signum()).collect();
                let dist: f64 = cells.iter().map(|&i| 2.0 * vol[i]).sum();
                if dist > eps {
                    continue;
                }
                let lin: f64 = cells.iter().zip(&delta).map(|(&i, d)| phi[i] * d * vol[i]).sum();
                let dj = problem.increment(&cells, &delta);
                first.push(2.0 * lin / (dist * dist));
                samples.push(GrowthSample { radius: eps, l1_norm: dist, ratio: 2.0 * dj / (dist * dist), sampler_tag: tag });
            }
            (samples, first)
        })
        .collect();
    let mut first_order = Vec::new();
    let mut samples = Vec::new();
    let mut all_first = Vec::new();
    for (s, f) in per_radius {
        first_order.push(f.iter().copied().fold(f64::INFINITY, f64::min));
        all_first.extend(f);
        samples.push(s);
    }
    let (first_order_c, _) = trimmed_min(&all_first);
    let report = assemble_growth(&cfg.eps_schedule, samples, cfg.seed, Vec::new());
    Ok(StripGrowth { report, first_order, first_order_c })
}

/// No-gap analysis of a bang-bang problem: SSC in the explicit surface form
/// ½∫_Z g²|∇φ̄| + J″(g·H|_Z)² > 0 over the sampled densities, level-set constant,
/// strip growth in L¹, and the resulting verdict.
pub fn bangbang_no_gap(
    problem: &BangBangProblem,
    g_samples: &[&(dyn Fn(Point2) -> f64 + Sync)],
    cfg: &BangBangConfig,
) -> Result<SocReport> {
    let mut diagnostics = Vec::new();
    let sm = extract_zero_set(&problem.field, cfg.grad_floor)?;
    let level_set = level_set_constant(&problem.field, cfg.s_max, cfg.levels)?;
    let k = level_set.k_estimate;
    let necessary_only = !(k > 0.0);
    if !level_set.monotone_flag {
        diagnostics.push("level-set ratios vary by more than 5% over the tail".to_string());
    }
    let strips = strip_growth_sample(problem, &cfg.growth)?;
    let first_order_c = strips.first_order_c.is_finite().then_some(strips.first_order_c);
    let ndc = match first_order_c {
        Some(c) if c > 0.0 => {
            NdcResult::EstablishedVia { criteria: vec![NdcCriterion::C], min_eigenvalue: None, first_order_c }
        }
        _ => NdcResult::Unverified { min_eigenvalue: None, first_order_c },
    };

    let mut records = Vec::with_capacity(g_samples.len());
    let mut norms = Vec::with_capacity(g_samples.len());
    if !sm.is_empty() {
        for (i, g) in g_samples.iter().enumerate() {
            let smg = sm.with_density(*g);
            let q = surface_curvature(&smg)?;
            let hessian_term = problem.hessian_surface(&smg)?;
            norms.push(smg.total_variation()?);
            records.push(CurvatureRecord {
                label: format!("g{i}"),
                direction: smg.density()?.to_vec(),
                curvature: CurvatureValue {
                    value: CurvatureKind::Finite(q),
                    method: CurvatureMethod::BangbangSurface,
                    upper_bound_only: false,
                    diagnostics: Vec::new(),
                },
                hessian_term,
            });
        }
    }
    let advisory = !ndc.established();
    let mut ssc = SscResult::Holds { vacuous: records.is_empty(), advisory };
    for r in &records {
        let v = r.second_order_value();
        if v.finite().is_some_and(|x| x <= SSC_POSITIVITY_TOL) {
            ssc = SscResult::Fails { witness: r.direction.clone(), value: v, advisory };
            break;
        }
    }
    if necessary_only && ssc.holds() {
        ssc = SscResult::Inconclusive {
            reason: "level-set constant is not positive; the surface inequality is only necessary".into(),
        };
    }
    let c = strips.report.fitted_c;
    let c_snc = if c.is_finite() { c.max(0.0) } else { 0.0 };
    let snc: Vec<SncResidual> = records
        .iter()
        .zip(&norms)
        .map(|(r, n)| SncResidual {
            label: r.label.clone(),
            c: c_snc,
            residual: r.second_order_value().plus(-c_snc * n * n),
            inconclusive: false,
        })
        .collect();
    let fonc = FoncResult::Holds;
    let verdict = render_verdict(Some(&fonc), Some(&ndc), &snc, &ssc, Some(&strips.report));
    let deficits = strips.first_order.iter().map(|f| (0.5 * k - f).max(0.0)).collect();
    Ok(SocReport {
        fonc: Some(fonc),
        ndc: Some(ndc),
        curvature: records,
        snc,
        snc_hypothesis: cfg.snc_hypothesis,
        ssc,
        growth: Some(strips.report),
        verdict,
        bangbang: Some(BangBangDetails {
            level_set,
            zero_set_points: sm.len(),
            zero_set_measure: sm.total_weight(),
            necessary_only,
            first_order_by_radius: strips.first_order,
            deficits,
        }),
        diagnostics,
    })
}
