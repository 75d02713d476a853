//! Small dense helpers: dot products, NNLS and polyhedral cone projections,
//! convex polygon clipping.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

pub fn mat_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}

/// Lawson–Hanson non-negative least squares: minimize ‖Σ μ_i g_i − target‖ over μ ≥ 0,
/// where `generators` are the columns g_i. Returns (μ, residual norm).
pub fn nnls(generators: &[Vec<f64>], target: &[f64]) -> (Vec<f64>, f64) {
    let m = generators.len();
    let n = target.len();
    if m == 0 {
        return (Vec::new(), norm2(target));
    }
    let a = DMatrix::from_fn(n, m, |i, j| generators[j][i]);
    let b = DVector::from_column_slice(target);
    let mut x = DVector::zeros(m);
    let mut passive = vec![false; m];
    let tol = 1e-13 * (1.0 + b.norm()) * (1.0 + a.norm());

    for _outer in 0..(3 * m + 10) {
        let w = a.transpose() * (&b - &a * &x);
        let candidate = (0..m)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _inner in 0..(3 * m + 10) {
            let idx: Vec<usize> = (0..m).filter(|&k| passive[k]).collect();
            let z = solve_least_squares(&a, &b, &idx);
            if idx.iter().zip(z.iter()).all(|(_, &v)| v > 0.0) {
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = z[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &i) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = x[i] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (z[k] - x[i]);
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    let resid = (&a * &x - &b).norm();
    (x.iter().copied().collect(), resid)
}

fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> Vec<f64> {
    let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])]);
    let svd = sub.svd(true, true);
    match svd.solve(b, 1e-13) {
        Ok(z) => z.iter().copied().collect(),
        Err(_) => vec![0.0; idx.len()],
    }
}

/// Euclidean projection onto the polyhedral cone {v : ⟨row, v⟩ ≤ 0 for all rows},
/// computed through the Moreau decomposition v = P_T(v) + P_{T°}(v), T° = cone(rows).
pub fn project_onto_polyhedral_cone(rows: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    if rows.is_empty() {
        return v.to_vec();
    }
    let (mu, _) = nnls(rows, v);
    let mut polar = vec![0.0; v.len()];
    for (m, r) in mu.iter().zip(rows) {
        for (p, ri) in polar.iter_mut().zip(r) {
            *p += m * ri;
        }
    }
    let p = sub(v, &polar);
    if norm2(&p) <= 1e-12 * norm2(v) {
        return vec![0.0; v.len()];
    }
    p
}

/// Whether `v` lies in cone(generators) up to `tol` (relative to 1 + ‖v‖).
pub fn in_conic_hull(generators: &[Vec<f64>], v: &[f64], tol: f64) -> bool {
    let scale = 1.0 + norm2(v);
    if generators.is_empty() {
        return norm2(v) <= tol * scale;
    }
    let (_, resid) = nnls(generators, v);
    resid <= tol * scale
}

pub type Point2 = [f64; 2];

/// Clip a convex polygon against the half-plane {p : ⟨n, p⟩ ≤ c}.
pub fn clip_half_plane(poly: &[Point2], n: Point2, c: f64) -> Vec<Point2> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let m = poly.len();
    for i in 0..m {
        let p = poly[i];
        let q = poly[(i + 1) % m];
        let fp = n[0] * p[0] + n[1] * p[1] - c;
        let fq = n[0] * q[0] + n[1] * q[1] - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let s = fp / (fp - fq);
            out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    out
}

pub fn polygon_area(poly: &[Point2]) -> f64 {
    let m = poly.len();
    if m < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..m {
        let p = poly[i];
        let q = poly[(i + 1) % m];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a.abs()
}

/// Intersection of a convex polygon with an axis-aligned rectangle.
pub fn clip_to_rect(poly: &[Point2], lo: Point2, hi: Point2) -> Vec<Point2> {
    let mut p = clip_half_plane(poly, [1.0, 0.0], hi[0]);
    p = clip_half_plane(&p, [-1.0, 0.0], -lo[0]);
    p = clip_half_plane(&p, [0.0, 1.0], hi[1]);
    clip_half_plane(&p, [0.0, -1.0], -lo[1])
}

/// Five-point Gauss–Legendre nodes and weights on [-1, 1].
pub const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_recovers_conic_combination() {
        let gens = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let (mu, r) = nnls(&gens, &[3.0, 1.0]);
        assert!(r < 1e-10);
        assert!((mu[0] - 2.0).abs() < 1e-10 && (mu[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nnls_outside_cone_has_residual() {
        let gens = vec![vec![1.0, 0.0]];
        let (_, r) = nnls(&gens, &[-1.0, 0.0]);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cone_projection_moreau() {
        // T = {v : v_2 <= 0}
        let p = project_onto_polyhedral_cone(&[vec![0.0, 1.0]], &[2.0, 3.0]);
        assert!((p[0] - 2.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn clip_square_by_diagonal() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let half = clip_half_plane(&sq, [1.0, 1.0], 1.0);
        assert!((polygon_area(&half) - 0.5).abs() < 1e-15);
    }
}
