use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::norm2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// Twice continuously differentiable; the second-order Taylor expansion holds.
    C2Taylor,
    Custom,
}

/// A twice-differentiable objective J with its first and second derivatives.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// J″(x)(a, b).
    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> f64;
    fn smoothness(&self) -> Smoothness {
        Smoothness::C2Taylor
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync;

/// Objective assembled from closures.
#[derive(Clone)]
pub struct FnObjective {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    hessian: Arc<HessFn>,
    smoothness: Smoothness,
}

impl FnObjective {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hessian: impl Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
            smoothness: Smoothness::C2Taylor,
        }
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    /// J(x) = ½ xᵀ Q x + cᵀ x with symmetric `q` (row-major rows).
    pub fn quadratic(q: Vec<Vec<f64>>, c: Vec<f64>) -> Self {
        let n = c.len();
        let q = Arc::new(q);
        let c = Arc::new(c);
        let (q1, q2, q3) = (q.clone(), q.clone(), q);
        let c1 = c.clone();
        Self::new(
            n,
            move |x| {
                let qx = crate::linalg::mat_vec(&q1, x);
                0.5 * crate::linalg::dot(x, &qx) + crate::linalg::dot(&c1, x)
            },
            move |x| {
                let qx = crate::linalg::mat_vec(&q2, x);
                qx.iter().zip(c.iter()).map(|(a, b)| a + b).collect()
            },
            move |_, a, b| crate::linalg::dot(a, &crate::linalg::mat_vec(&q3, b)),
        )
    }
}

impl fmt::Debug for FnObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObjective").field("dim", &self.dim).finish()
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        (self.hessian)(x, a, b)
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
}

/// `factor · J`; used for scale-invariance checks.
pub struct Scaled<O: ?Sized> {
    pub factor: f64,
    pub inner: Arc<O>,
}

impl<O: Objective + ?Sized> Objective for Scaled<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(x).into_iter().map(|g| self.factor * g).collect()
    }
    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        self.factor * self.inner.hessian_form(x, a, b)
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
}

pub const GRADIENT_REL_TOL: f64 = 1e-5;
pub const HESSIAN_REL_TOL: f64 = 1e-4;
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Outcome of the finite-difference self-checks of an objective.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConsistencyReport {
    pub points_checked: usize,
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
    pub max_asymmetry: f64,
    pub failures: Vec<String>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Central differences of a scalar map along each coordinate.
fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * (1.0 + x[i].abs());
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Checks gradient vs central differences of the value (relative 1e-5), Hessian form vs
/// central differences of the gradient (relative 1e-4) and symmetry of the Hessian form
/// (1e-12) at the supplied points plus `random` points drawn from `[-radius, radius]^n`
/// around each supplied point.
pub fn check_objective(
    obj: &dyn Objective,
    points: &[Vec<f64>],
    random: usize,
    radius: f64,
    seed: u64,
) -> ConsistencyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = obj.dim();
    let mut all = Vec::new();
    for p in points {
        all.push(p.clone());
        for _ in 0..random {
            all.push(p.iter().map(|x| x + rng.gen_range(-radius..=radius)).collect());
        }
    }
    let mut rep = ConsistencyReport::default();
    let value = |x: &[f64]| obj.value(x);
    for x in &all {
        rep.points_checked += 1;
        let g = obj.gradient(x);
        let fd = fd_gradient(&value, x);
        for i in 0..n {
            let err = (g[i] - fd[i]).abs() / (1.0 + g[i].abs());
            rep.max_gradient_error = rep.max_gradient_error.max(err);
            if err > GRADIENT_REL_TOL {
                rep.failures.push(format!("gradient[{i}] at {x:?}: {} vs fd {}", g[i], fd[i]));
            }
        }
        let basis = |i: usize| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        };
        for j in 0..n {
            let ej = basis(j);
            let col = fd_jacobian_column(&|y: &[f64]| obj.gradient(y), x, &ej);
            for i in 0..n {
                let ei = basis(i);
                let hij = obj.hessian_form(x, &ei, &ej);
                let hji = obj.hessian_form(x, &ej, &ei);
                let asym = (hij - hji).abs();
                rep.max_asymmetry = rep.max_asymmetry.max(asym);
                if asym > SYMMETRY_TOL * (1.0 + hij.abs()) {
                    rep.failures.push(format!("hessian asymmetric at ({i},{j}): {hij} vs {hji}"));
                }
                let err = (hij - col[i]).abs() / (1.0 + hij.abs());
                rep.max_hessian_error = rep.max_hessian_error.max(err);
                if err > HESSIAN_REL_TOL {
                    rep.failures.push(format!("hessian({i},{j}) at {x:?}: {hij} vs fd {}", col[i]));
                }
            }
        }
    }
    rep
}

/// Central difference of a vector map along `dir`.
pub(crate) fn fd_jacobian_column(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    dir: &[f64],
) -> Vec<f64> {
    let h = 1e-6 * (1.0 + norm2(x)) / norm2(dir).max(1e-300);
    let xp: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + h * d).collect();
    let xm: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a - h * d).collect();
    f(&xp).iter().zip(f(&xm)).map(|(p, m)| (p - m) / (2.0 * h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes_self_check() {
        let q = FnObjective::quadratic(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![1.0, -1.0]);
        let rep = check_objective(&q, &[vec![0.3, -0.2]], 10, 1.0, 7);
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let bad = FnObjective::new(1, |x| x[0] * x[0], |x| vec![3.0 * x[0]], |_, a, b| 2.0 * a[0] * b[0]);
        let rep = check_objective(&bad, &[vec![1.0]], 0, 0.0, 0);
        assert!(!rep.passed());
    }

    #[test]
    fn asymmetric_hessian_is_caught() {
        let bad = FnObjective::new(
            2,
            |x| x[0] * x[1],
            |x| vec![x[1], x[0]],
            |_, a, b| a[0] * b[1] + 1.001 * a[1] * b[0],
        );
        let rep = check_objective(&bad, &[vec![0.0, 0.0]], 0, 0.0, 0);
        assert!(rep.max_asymmetry > 1e-4);
        assert!(!rep.passed());
    }
}
