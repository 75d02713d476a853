use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CurvatureConfig, CurvatureKind, CurvatureMethod, CurvatureValue, TrailEntry};
use crate::cones::{critical_cone_membership, ConeQuery};
use crate::error::{domain, structural, Result};
use crate::linalg::{dot, norm2};
use crate::model::AdmissibleSet;

/// Penalty weights of the continuation.
const PENALTIES: [f64; 6] = [1.0, 1e2, 1e4, 1e6, 1e8, 1e10];
/// Estimates beyond this multiple of 1 + ‖φ‖‖h‖² count as diverged outright.
const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Smaller multiple that counts as diverged when the trail grows like a power of 1/t.
const GROWTH_THRESHOLD: f64 = 10.0;
const MIN_GROWTH_SLOPE: f64 = 0.2;
const TAIL: usize = 4;

/// Brute-force estimate of Q_C^{x,φ}(h).
///
/// For t_k = t0·2⁻ᵏ minimizes ⟨φ, r⟩ over corrections with x + t_k h + ½t_k² r ∈ C and
/// ‖r‖ ≤ R_k, where R_k = radius_factor·(t0/t_k)^{1/4}, for the unit direction h/‖h‖, and
/// rescales by ‖h‖². The radius grows slowly so that t_k r_k → 0 along the schedule. Finite
/// results are upper bounds.
pub fn curvature_brute_force(
    set: &AdmissibleSet,
    x: &[f64],
    phi: &[f64],
    h: &[f64],
    cfg: &CurvatureConfig,
) -> Result<CurvatureValue> {
    let q = ConeQuery::new(set, x)?.with_functional(phi)?;
    if !critical_cone_membership(&q, h, 1e-8)? {
        return Err(domain("direction is not in the critical cone"));
    }
    if !(cfg.t0 > 0.0) || cfg.restarts == 0 {
        return Err(structural("brute force needs t0 > 0 and at least one restart"));
    }
    let n = x.len();
    let nh = norm2(h);
    if nh == 0.0 {
        return Ok(CurvatureValue::exact(CurvatureKind::Finite(0.0), CurvatureMethod::BruteForce));
    }
    let unit: Vec<f64> = h.iter().map(|c| c / nh).collect();
    let h = unit.as_slice();
    let scale = cfg.radius_factor;
    let feas_tol = 1e-6 * (1.0 + norm2(phi));
    let mut trail = Vec::with_capacity(cfg.k_max + 1);
    let mut warm = vec![0.0; n];
    for k in 0..=cfg.k_max {
        let t = cfg.t0 * 0.5f64.powi(k as i32);
        let radius = scale * (cfg.t0 / t).powf(0.25);
        let results: Vec<(f64, f64, Vec<f64>)> = (0..cfg.restarts)
            .into_par_iter()
            .map(|restart| {
                let inner = Inner { set, x, phi, h, t, radius, scratch: RefCell::new(Vec::with_capacity(n)) };
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((k as u64) << 32) | restart as u64);
                let start: Vec<f64> = if restart == 0 {
                    inner.clip(&warm)
                } else {
                    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let u: f64 = rng.gen();
                    let nv = norm2(&v).max(1e-300);
                    v.iter().map(|c| c / nv * radius * u).collect()
                };
                inner.solve(start)
            })
            .collect();
        // Feasible minimum first, ties by restart index; otherwise least infeasible.
        let mut best: Option<usize> = None;
        for (i, res) in results.iter().enumerate() {
            let better = match best {
                None => true,
                Some(b) => {
                    let rb = &results[b];
                    let fi = res.1 <= feas_tol;
                    let fb = rb.1 <= feas_tol;
                    match (fi, fb) {
                        (true, false) => true,
                        (false, true) => false,
                        (true, true) => res.0 < rb.0,
                        (false, false) => res.1 < rb.1,
                    }
                }
            };
            if better {
                best = Some(i);
            }
        }
        let (value, resid, r) = results[best.unwrap()].clone();
        let feasible = resid <= feas_tol;
        trail.push(TrailEntry {
            t,
            best: feasible.then_some(value),
            feasibility_residual: resid,
            radius,
        });
        warm = r;
    }
    let value = classify_trail(&trail, 1.0 + norm2(phi), cfg.rel_tol);
    // Q(h) = ‖h‖² Q(h/‖h‖): the correction r for h/‖h‖ at step t is ‖h‖² times the one for h
    // at step t/‖h‖.
    let nh2 = nh * nh;
    let trail = trail
        .into_iter()
        .map(|e| TrailEntry {
            t: e.t / nh,
            best: e.best.map(|b| b * nh2),
            feasibility_residual: e.feasibility_residual,
            radius: e.radius * nh2,
        })
        .collect();
    Ok(CurvatureValue {
        value: value.scaled(nh2),
        method: CurvatureMethod::BruteForce,
        upper_bound_only: matches!(value, CurvatureKind::Finite(_)),
        diagnostics: trail,
    })
}

/// Classifies a brute-force trail; `scale_ref` is 1 + ‖φ‖‖h‖².
pub fn classify_trail(trail: &[TrailEntry], scale_ref: f64, rel_tol: f64) -> CurvatureKind {
    let infeasible_tail = trail.iter().rev().take_while(|e| e.best.is_none()).count();
    if infeasible_tail >= TAIL {
        return CurvatureKind::PlusInfinity;
    }
    if infeasible_tail > 0 {
        return CurvatureKind::Unresolved;
    }
    let feasible: Vec<(f64, f64)> = trail
        .iter()
        .rev()
        .take_while(|e| e.best.is_some())
        .map(|e| (e.t, e.best.unwrap()))
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if feasible.len() < 2 {
        return CurvatureKind::Unresolved;
    }
    let last = feasible[feasible.len() - 1].1;
    if feasible.len() >= TAIL {
        let tail = &feasible[feasible.len() - TAIL..];
        let increasing = tail.windows(2).all(|w| w[1].1 > w[0].1);
        let decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);
        let monotone_outward = (increasing && last > 0.0) || (decreasing && last < 0.0);
        if monotone_outward {
            let diverged = last.abs() > DIVERGENCE_THRESHOLD * scale_ref;
            let grows = last.abs() > GROWTH_THRESHOLD * scale_ref && growth_slope(tail) >= MIN_GROWTH_SLOPE;
            if diverged || grows {
                return if last > 0.0 {
                    CurvatureKind::PlusInfinity
                } else {
                    CurvatureKind::MinusInfinity
                };
            }
        }
    }
    let prev = feasible[feasible.len() - 2].1;
    if (last - prev).abs() <= rel_tol * (1.0 + last.abs()) {
        CurvatureKind::Finite(last)
    } else {
        CurvatureKind::Unresolved
    }
}

/// Least-squares slope of log|estimate| against log(1/t).
fn growth_slope(tail: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(t, v)| (-t.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

struct Inner<'a> {
    set: &'a AdmissibleSet,
    x: &'a [f64],
    phi: &'a [f64],
    h: &'a [f64],
    t: f64,
    radius: f64,
    scratch: RefCell<Vec<f64>>,
}

impl Inner<'_> {
    fn clip(&self, r: &[f64]) -> Vec<f64> {
        let nr = norm2(r);
        if nr > self.radius {
            r.iter().map(|v| v * self.radius / nr).collect()
        } else {
            r.to_vec()
        }
    }

    fn clip_in_place(&self, r: &mut [f64]) {
        let nr = norm2(r);
        if nr > self.radius {
            let s = self.radius / nr;
            r.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Violation of x + t h + ½t² r ∈ C in units of r.
    fn violation(&self, r: &[f64]) -> f64 {
        let half = 0.5 * self.t * self.t;
        let mut d = self.scratch.borrow_mut();
        d.clear();
        d.extend(self.h.iter().zip(r).map(|(hi, ri)| self.t * hi + half * ri));
        self.set.violation_at_offset(self.x, &d) / half
    }

    /// Returns (⟨φ, r⟩, violation, r) at the end of the penalty continuation.
    fn solve(&self, start: Vec<f64>) -> (f64, f64, Vec<f64>) {
        let n = start.len();
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * n + 2);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            dirs.push(e.clone());
            e[i] = -1.0;
            dirs.push(e);
        }
        let nphi = norm2(self.phi);
        if nphi > 0.0 && n > 1 {
            dirs.push(self.phi.iter().map(|v| v / nphi).collect());
            dirs.push(self.phi.iter().map(|v| -v / nphi).collect());
        }
        let mut r = self.clip(&start);
        for (stage, &mu) in PENALTIES.iter().enumerate() {
            let f = |r: &[f64]| {
                let v = self.violation(r);
                dot(self.phi, r) + mu * v * v
            };
            // Intermediate stages only warm-start the next one.
            let rel_step = if stage + 1 == PENALTIES.len() { 1e-12 } else { 1e-8 };
            r = self.pattern_search(&f, r, &dirs, rel_step);
        }
        (dot(self.phi, &r), self.violation(&r), r)
    }

    fn pattern_search(&self, f: &dyn Fn(&[f64]) -> f64, start: Vec<f64>, dirs: &[Vec<f64>], rel_step: f64) -> Vec<f64> {
        let step0 = 0.25 * self.radius;
        let step_min = rel_step * self.radius;
        let mut r = start;
        let mut best = f(&r);
        let mut step = step0;
        let mut evals = 0usize;
        let mut cand = vec![0.0; r.len()];
        while step > step_min && evals < 40_000 {
            let mut improved = false;
            for d in dirs {
                for ((c, a), b) in cand.iter_mut().zip(&r).zip(d) {
                    *c = a + step * b;
                }
                self.clip_in_place(&mut cand);
                let v = f(&cand);
                evals += 1;
                if v < best {
                    best = v;
                    std::mem::swap(&mut r, &mut cand);
                    improved = true;
                    break;
                }
            }
            if improved {
                step = (2.0 * step).min(step0);
            } else {
                step *= 0.5;
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConvexSet, Side};

    fn entry(t: f64, best: Option<f64>) -> TrailEntry {
        TrailEntry { t, best, feasibility_residual: 0.0, radius: 1.0 }
    }

    #[test]
    fn classify_converged_trail() {
        let trail: Vec<_> = (0..8).map(|k| entry(0.5f64.powi(k), Some(2.0 + 1e-6 * 0.5f64.powi(k)))).collect();
        assert_eq!(classify_trail(&trail, 2.0, 1e-3), CurvatureKind::Finite(trail[7].best.unwrap()));
    }

    #[test]
    fn classify_infeasible_tail() {
        let mut trail: Vec<_> = (0..6).map(|k| entry(0.5f64.powi(k), Some(k as f64))).collect();
        trail.extend((6..10).map(|k| entry(0.5f64.powi(k), None)));
        assert_eq!(classify_trail(&trail, 2.0, 1e-3), CurvatureKind::PlusInfinity);
    }

    #[test]
    fn classify_power_growth() {
        let trail: Vec<_> = (0..12)
            .map(|k| {
                let t = 0.1 * 0.5f64.powi(k);
                entry(t, Some(-2.0 * t.powf(-0.5)))
            })
            .collect();
        assert_eq!(classify_trail(&trail, 2.0, 1e-3), CurvatureKind::MinusInfinity);
    }

    #[test]
    fn box_curvature_is_zero() {
        let c = AdmissibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let v = curvature_brute_force(&c, &[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &CurvatureConfig::default()).unwrap();
        let q = v.value.finite().unwrap();
        assert!(q.abs() < 1e-6, "{q}");
        assert!(v.upper_bound_only);
    }

    #[test]
    fn power_epigraph_infinities() {
        let cfg = CurvatureConfig::default();
        let above = AdmissibleSet::power_epigraph(1.5, Side::Above).unwrap();
        let v = curvature_brute_force(&above, &[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &cfg).unwrap();
        assert_eq!(v.value, CurvatureKind::PlusInfinity);
        let below = AdmissibleSet::power_epigraph(1.5, Side::Below).unwrap();
        let v = curvature_brute_force(&below, &[0.0, 0.0], &[0.0, -1.0], &[1.0, 0.0], &cfg).unwrap();
        assert_eq!(v.value, CurvatureKind::MinusInfinity);
    }

    #[test]
    fn ball_curvature() {
        let c = AdmissibleSet::Convex(ConvexSet::UnitBall { dim: 2 });
        let v = curvature_brute_force(&c, &[1.0, 0.0], &[-2.0, 0.0], &[0.0, 1.0], &CurvatureConfig::default()).unwrap();
        let q = v.value.finite().unwrap();
        assert!((q - 2.0).abs() < 0.02, "{q}");
    }

    #[test]
    fn rejects_non_critical_and_non_normal() {
        let c = AdmissibleSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let cfg = CurvatureConfig::default();
        assert!(curvature_brute_force(&c, &[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &cfg).is_err());
        assert!(curvature_brute_force(&c, &[1.0, 0.0], &[-1.0, 0.0], &[-1.0, 1.0], &cfg).is_err());
    }
}
