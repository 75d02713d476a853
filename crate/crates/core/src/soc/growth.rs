use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::model::{AdmissibleSet, Norm, Objective, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerTag {
    /// Random perturbations mapped back by the Euclidean projection onto C.
    Projection,
    /// Points on and near the graph of a power epigraph.
    Graph,
    /// Bisection along rays from x̄ to the last feasible point.
    Bisection,
    /// Points x̄ + ρh (feasibility-corrected) along sampled critical directions.
    CriticalRay,
    /// Bang-bang band flips centred on the zero set.
    StripCentered,
    /// Bang-bang band flips on one side of the zero set.
    StripOneSided,
    /// Bang-bang band flips with a random split between the two sides.
    StripOffset,
}

impl SamplerTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerTag::Projection => "projection",
            SamplerTag::Graph => "graph",
            SamplerTag::Bisection => "bisection",
            SamplerTag::CriticalRay => "critical_ray",
            SamplerTag::StripCentered => "strip_centered",
            SamplerTag::StripOneSided => "strip_one_sided",
            SamplerTag::StripOffset => "strip_offset",
        }
    }
}

/// Samples closer to x̄ than this fraction of the radius are discarded: J(x) − J(x̄)
/// loses all significant digits there.
pub const MIN_RELATIVE_DISTANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthConfig {
    pub eps_schedule: Vec<f64>,
    pub samples_per_radius: usize,
    pub seed: u64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self { eps_schedule: vec![0.1, 0.05, 0.025, 0.0125], samples_per_radius: 256, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthSample {
    /// Radius level the sample was drawn for.
    pub radius: f64,
    /// ‖x − x̄‖ in the problem norm (L¹ for bang-bang problems).
    pub l1_norm: f64,
    /// 2(J(x) − J(x̄)) / ‖x − x̄‖².
    pub ratio: f64,
    pub sampler_tag: SamplerTag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    #[serde(skip)]
    pub samples: Vec<GrowthSample>,
    /// Minimum after discarding the lowest 1% of ratios.
    pub fitted_c: f64,
    pub raw_min: f64,
    pub per_radius_min: Vec<f64>,
    pub epsilon_used: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// (1%-trimmed minimum, raw minimum) of the ratios.
pub fn trimmed_min(ratios: &[f64]) -> (f64, f64) {
    if ratios.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    let drop = ratios.len() / 100;
    (sorted[drop], sorted[0])
}

/// Assembles a report from per-radius sample lists.
pub(crate) fn assemble(radii: &[f64], per_radius: Vec<Vec<GrowthSample>>, seed: u64, mut notes: Vec<String>) -> GrowthReport {
    let mut per_radius_min = Vec::with_capacity(radii.len());
    let mut samples = Vec::new();
    for (r, list) in radii.iter().zip(per_radius) {
        if list.is_empty() {
            notes.push(format!("radius {r:e}: no feasible sample reached this radius; skipped"));
        }
        per_radius_min.push(list.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min));
        samples.extend(list);
    }
    let ratios: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
    let (fitted_c, raw_min) = trimmed_min(&ratios);
    let epsilon_used = samples.iter().map(|s| s.radius).fold(0.0, f64::max);
    GrowthReport {
        radii: radii.to_vec(),
        sample_count: samples.len(),
        samples,
        fitted_c,
        raw_min,
        per_radius_min,
        epsilon_used,
        seed,
        notes,
    }
}

pub(crate) fn gaussian_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let nv = crate::linalg::norm2(&v);
        if nv > 1e-12 {
            return v.iter().map(|c| c / nv).collect();
        }
    }
}

/// Last feasible point on the segment from x̄ to y.
fn bisect_ray(set: &AdmissibleSet, xbar: &[f64], y: &[f64], tol: f64) -> Vec<f64> {
    if set.contains(y, tol) {
        return y.to_vec();
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p: Vec<f64> = xbar.iter().zip(y).map(|(a, b)| a + mid * (b - a)).collect();
        if set.contains(&p, tol) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    xbar.iter().zip(y).map(|(a, b)| a + lo * (b - a)).collect()
}

fn feasible_point(set: &AdmissibleSet, xbar: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let tol = set.default_tolerance();
    match set {
        AdmissibleSet::LevelSet(_) => Some(bisect_ray(set, xbar, y, tol)),
        _ => {
            if set.contains(y, 0.0) {
                Some(y.to_vec())
            } else {
                set.project(y).ok()
            }
        }
    }
}

/// Empirical quadratic growth: ratios 2(J(x) − J(x̄))/‖x − x̄‖² at feasible points with
/// ‖x − x̄‖ ≤ ε for each ε of the schedule, from a variant-aware sampler plus points along
/// the supplied critical directions.
pub fn growth_sample(
    set: &AdmissibleSet,
    obj: &dyn Objective,
    xbar: &[f64],
    norm: &Norm,
    critical: &[Vec<f64>],
    cfg: &GrowthConfig,
) -> Result<GrowthReport> {
    if !set.contains(xbar, set.default_tolerance()) {
        return Err(structural("growth sampling needs a feasible base point"));
    }
    if cfg.eps_schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(structural("growth radii must be positive"));
    }
    let n = xbar.len();
    let j0 = obj.value(xbar);
    let tag = match set {
        AdmissibleSet::PowerEpigraph { .. } => SamplerTag::Graph,
        AdmissibleSet::LevelSet(_) => SamplerTag::Bisection,
        _ => SamplerTag::Projection,
    };
    let per_radius: Vec<Result<Vec<GrowthSample>>> = cfg
        .eps_schedule
        .par_iter()
        .enumerate()
        .map(|(ri, &eps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(ri as u64 + 1);
            let mut out = Vec::new();
            let push = |x: Vec<f64>, sampler_tag: SamplerTag, out: &mut Vec<GrowthSample>| -> Result<()> {
                let diff: Vec<f64> = x.iter().zip(xbar).map(|(a, b)| a - b).collect();
                let dist = norm.eval(&diff)?;
                if dist >= MIN_RELATIVE_DISTANCE * eps && dist <= eps {
                    let ratio = 2.0 * (obj.value(&x) - j0) / (dist * dist);
                    out.push(GrowthSample { radius: eps, l1_norm: dist, ratio, sampler_tag });
                }
                Ok(())
            };
            for k in 0..cfg.samples_per_radius {
                let rho = eps * (0.5 + 0.5 * rng.gen::<f64>());
                let candidate = if tag == SamplerTag::Graph && k % 2 == 0 {
                    let (alpha, side) = match set {
                        AdmissibleSet::PowerEpigraph { alpha, side } => (*alpha, *side),
                        _ => unreachable!(),
                    };
                    let s = xbar[0] + rho * (2.0 * rng.gen::<f64>() - 1.0);
                    let b = s.abs().powf(alpha);
                    let u = if k % 4 == 0 { 0.0 } else { rho * rng.gen::<f64>() };
                    Some(match side {
                        Side::Above => vec![s, b + u],
                        Side::Below => vec![s, b - u],
                    })
                } else {
                    let d = gaussian_direction(&mut rng, n);
                    let y: Vec<f64> = xbar.iter().zip(&d).map(|(a, b)| a + rho * b).collect();
                    feasible_point(set, xbar, &y)
                };
                if let Some(x) = candidate {
                    push(x, tag, &mut out)?;
                }
            }
            for h in critical {
                for j in 1..=4 {
                    let rho = eps * j as f64 / 4.0;
                    let y: Vec<f64> = xbar.iter().zip(h).map(|(a, b)| a + rho * b).collect();
                    if let Some(x) = feasible_point(set, xbar, &y) {
                        push(x, SamplerTag::CriticalRay, &mut out)?;
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let per_radius = per_radius.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(assemble(&cfg.eps_schedule, per_radius, cfg.seed, Vec::new()))
}
