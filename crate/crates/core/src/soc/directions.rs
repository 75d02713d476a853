use crate::cones::ConeQuery;
use crate::error::Result;
use crate::linalg::{dot, norm2};

const PRIMES: [u32; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Deterministic low-discrepancy unit vectors: evenly spaced angles in 2D, scrambled
/// Halton points pushed to the sphere otherwise.
pub fn sphere_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        0 => Vec::new(),
        1 => [1.0, -1.0].iter().cycle().take(count).map(|s| vec![*s]).collect(),
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => (1..=count as u64)
            .map(|i| {
                let v: Vec<f64> = (0..n)
                    .map(|d| {
                        let base = PRIMES[d % PRIMES.len()];
                        // Dimensions beyond the prime table reuse bases with a shifted index.
                        let shift = (d / PRIMES.len()) as u64 * 7919;
                        2.0 * radical_inverse(i + shift, base) - 1.0
                    })
                    .collect();
                let nv = norm2(&v).max(1e-300);
                v.iter().map(|c| c / nv).collect()
            })
            .collect(),
    }
}

/// Unit critical directions: sphere samples projected onto the critical cone,
/// normalized and de-duplicated. Empty when the critical cone is {0}.
pub fn critical_directions(q: &ConeQuery<'_>, count: usize) -> Result<Vec<Vec<f64>>> {
    let n = q.base().len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in sphere_points(n, count) {
        let p = q.project_critical(&v)?;
        let np = norm2(&p);
        if np < 1e-8 {
            continue;
        }
        let u: Vec<f64> = p.iter().map(|c| c / np).collect();
        if out.iter().all(|w| dot(w, &u) < 1.0 - 1e-9) {
            out.push(u);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::critical_cone_membership;
    use crate::model::{AdmissibleSet, Side};

    #[test]
    fn sphere_points_are_unit() {
        for n in 1..6 {
            for v in sphere_points(n, 20) {
                assert!((norm2(&v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn critical_directions_are_critical() {
        let c = AdmissibleSet::boxed(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let q = ConeQuery::new(&c, &[1.0, 0.0, -1.0]).unwrap().with_functional(&[-1.0, 0.0, 0.0]).unwrap();
        let dirs = critical_directions(&q, 32).unwrap();
        assert!(!dirs.is_empty());
        for h in &dirs {
            assert!(critical_cone_membership(&q, h, 1e-8).unwrap());
        }
    }

    #[test]
    fn power_epigraph_critical_line() {
        let c = AdmissibleSet::power_epigraph(1.5, Side::Above).unwrap();
        let q = ConeQuery::new(&c, &[0.0, 0.0]).unwrap().with_functional(&[0.0, 1.0]).unwrap();
        let dirs = critical_directions(&q, 16).unwrap();
        assert_eq!(dirs.len(), 2);
        assert!(dirs.iter().all(|h| h[1].abs() < 1e-12));
    }

    #[test]
    fn trivial_critical_cone() {
        let c = AdmissibleSet::boxed(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let q = ConeQuery::new(&c, &[1.0, 1.0]).unwrap().with_functional(&[-1.0, -1.0]).unwrap();
        assert!(critical_directions(&q, 16).unwrap().is_empty());
    }
}
