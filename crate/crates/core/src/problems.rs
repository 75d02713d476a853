//! Bundled example problems.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bangbang::{AdjointField, BangBangProblem};
use crate::error::{domain, Result};
use crate::linalg::Point2;
use crate::model::{AdmissibleSet, ConvexSet, FnConstraintMap, FnObjective, Grid, LevelSet, Norm, Side};
use crate::soc::Problem;

/// A bundled example: name, short description and its run configuration.
#[derive(Debug, Clone, Copy)]
pub struct Example {
    pub name: &'static str,
    pub label: &'static str,
    pub config: &'static str,
}

pub const EXAMPLES: [Example; 7] = [
    Example {
        name: "box_qp",
        label: "quadratic over a box, one active bound (polyhedric, zero curvature)",
        config: include_str!("../configs/box_qp.json"),
    },
    Example {
        name: "control_constrained",
        label: "discretized control-constrained elliptic tracking problem",
        config: include_str!("../configs/control_constrained.json"),
    },
    Example {
        name: "state_constrained_ball",
        label: "unit-ball level set G(u) = |u|^2 - 1, pullback curvature 2*lambda",
        config: include_str!("../configs/state_constrained_ball.json"),
    },
    Example {
        name: "power_epigraph",
        label: "epigraph of |x1|^1.5, curvature +infinity",
        config: include_str!("../configs/power_epigraph.json"),
    },
    Example {
        name: "power_epigraph_flipped",
        label: "hypograph of |x1|^1.5, curvature -infinity",
        config: include_str!("../configs/power_epigraph_flipped.json"),
    },
    Example {
        name: "bangbang_1d",
        label: "bang-bang control on (0,1) with adjoint xi - 1/2",
        config: include_str!("../configs/bangbang_1d.json"),
    },
    Example {
        name: "bangbang_2d_circle",
        label: "bang-bang control on (-1,1)^2 switching on the circle of radius 1/2",
        config: include_str!("../configs/bangbang_2d_circle.json"),
    },
];

pub fn example(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

/// min ½‖x − (2, 0.3)‖² over [−1, 1]² at x̄ = (1, 0.3).
pub fn box_qp() -> Problem {
    let set = AdmissibleSet::boxed(vec![-1.0; 2], vec![1.0; 2]).expect("valid box");
    let j = FnObjective::quadratic(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![-2.0, -0.3]);
    Problem::new(set, Arc::new(j), vec![1.0, 0.3]).expect("consistent dimensions")
}

/// J = s·x₂ − m·x₁² at the origin of {x₂ ≥ |x₁|^α} (s = 1) or {x₂ ≤ |x₁|^α} (s = −1).
pub fn power_epigraph(alpha: f64, side: Side, m: f64) -> Result<Problem> {
    let set = AdmissibleSet::power_epigraph(alpha, side)?;
    let s = if side == Side::Above { 1.0 } else { -1.0 };
    let j = FnObjective::new(
        2,
        move |x| s * x[1] - m * x[0] * x[0],
        move |x| vec![-2.0 * m * x[0], s],
        move |_, a, b| -2.0 * m * a[0] * b[0],
    );
    Problem::new(set, Arc::new(j), vec![0.0, 0.0])
}

/// Unit ball as {‖u‖² − 1 ≤ 0} with J = −½‖u‖² − (2λ − 1)u₁ at x̄ = (1, 0), whose
/// multiplier is λ.
pub fn state_constrained_ball(lambda: f64) -> Problem {
    let ls = LevelSet::new(Arc::new(FnConstraintMap::unit_sphere(2)), ConvexSet::NonPositive, true)
        .expect("consistent level set");
    let a = 2.0 * lambda - 1.0;
    let j = FnObjective::new(
        2,
        move |x| -0.5 * (x[0] * x[0] + x[1] * x[1]) - a * x[0],
        move |x| vec![-x[0] - a, -x[1]],
        |_, u, v| -(u[0] * v[0] + u[1] * v[1]),
    );
    Problem::new(AdmissibleSet::LevelSet(ls), Arc::new(j), vec![1.0, 0.0]).expect("consistent dimensions")
}

/// Data of the discretized tracking problem
/// min ½‖Su − y_d‖² + (γ/2)‖u‖² over −1 ≤ u ≤ 1 on (0, 1), where S solves −y″ = u with
/// homogeneous Dirichlet conditions (Green's function quadrature at cell centres).
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub cells: usize,
    pub gamma: f64,
    /// K_ij = G(ξ_i, ξ_j)·h.
    pub solution_operator: Vec<Vec<f64>>,
    pub desired_state: Vec<f64>,
}

impl ControlProblem {
    pub fn new(cells: usize, gamma: f64) -> Self {
        let h = 1.0 / cells as f64;
        let xi: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * h).collect();
        let green = |s: f64, t: f64| s.min(t) * (1.0 - s.max(t));
        let solution_operator = xi.iter().map(|&s| xi.iter().map(|&t| green(s, t) * h).collect()).collect();
        let desired_state = xi.iter().map(|&s| 8.0 * (2.0 * std::f64::consts::PI * s).sin()).collect();
        Self { cells, gamma, solution_operator, desired_state }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// Reduced Hessian h·KᵀK + γh·I and linear term −h·Kᵀy_d of the Euclidean representation.
    pub fn quadratic_form(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.cells;
        let h = self.spacing();
        let k = DMatrix::from_fn(n, n, |i, j| self.solution_operator[i][j]);
        let yd = DVector::from_vec(self.desired_state.clone());
        let q = (k.transpose() * &k) * h + DMatrix::identity(n, n) * (self.gamma * h);
        let c = -(k.transpose() * yd) * h;
        ((0..n).map(|i| (0..n).map(|j| q[(i, j)]).collect()).collect(), c.iter().copied().collect())
    }

    pub fn objective(&self) -> FnObjective {
        let (q, c) = self.quadratic_form();
        FnObjective::quadratic(q, c)
    }

    /// Exact minimizer by a primal-dual active-set iteration on the reduced QP.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let n = self.cells;
        let (q, c) = self.quadratic_form();
        let qm = DMatrix::from_fn(n, n, |i, j| q[i][j]);
        let mut u = vec![0.0; n];
        let mut mu = vec![0.0; n];
        let mut state: Vec<i8> = vec![2; n];
        for _ in 0..100 {
            // Active sets from u + μ/(γh) compared with the bounds.
            let scale = self.gamma * self.spacing();
            let next: Vec<i8> = (0..n)
                .map(|i| {
                    let v = u[i] + mu[i] / scale;
                    if v > 1.0 {
                        1
                    } else if v < -1.0 {
                        -1
                    } else {
                        0
                    }
                })
                .collect();
            if next == state {
                return Ok(u);
            }
            state = next;
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
            for i in 0..n {
                if state[i] != 0 {
                    u[i] = state[i] as f64;
                }
            }
            if !free.is_empty() {
                let m = free.len();
                let a = DMatrix::from_fn(m, m, |r, s| qm[(free[r], free[s])]);
                let rhs = DVector::from_fn(m, |r, _| {
                    let i = free[r];
                    -c[i] - (0..n).filter(|&j| state[j] != 0).map(|j| q[i][j] * u[j]).sum::<f64>()
                });
                let sol = a.lu().solve(&rhs).ok_or_else(|| domain("singular reduced system"))?;
                for (r, &i) in free.iter().enumerate() {
                    u[i] = sol[r];
                }
            }
            // μ = −∇J on the active set (so that ∇J + μ = 0), zero elsewhere.
            for i in 0..n {
                let g: f64 = (0..n).map(|j| q[i][j] * u[j]).sum::<f64>() + c[i];
                mu[i] = if state[i] == 0 { 0.0 } else { -g };
            }
        }
        Err(domain("active-set iteration did not settle"))
    }

    pub fn problem(&self) -> Result<Problem> {
        let n = self.cells;
        let set = AdmissibleSet::boxed(vec![-1.0; n], vec![1.0; n])?;
        let u = self.solve()?;
        Ok(Problem::new(set, Arc::new(self.objective()), u)?
            .with_norm(Norm::WeightedL2(vec![self.spacing(); n].into())))
    }
}

/// Linear bang-bang problem with φ̄ = ξ − ½ on (0, 1).
pub fn bangbang_1d(cells: usize) -> Result<BangBangProblem> {
    let grid = Grid::interval(0.0, 1.0, cells)?;
    Ok(BangBangProblem::linear(AdjointField::analytic(grid, |p| p[0] - 0.5, |_| [1.0, 0.0])?))
}

/// Linear bang-bang problem with φ̄ = ξ₁² + ξ₂² − ¼ on (−1, 1)².
pub fn bangbang_2d_circle(cells: usize) -> Result<BangBangProblem> {
    let grid = Grid::rectangle([-1.0, -1.0], [1.0, 1.0], cells)?;
    let field = AdjointField::analytic(grid, |p| p[0] * p[0] + p[1] * p[1] - 0.25, |p: Point2| [2.0 * p[0], 2.0 * p[1]])?;
    Ok(BangBangProblem::linear(field))
}

/// The 1D problem with the indefinite kernel k(s, t) = −κ b(s) b(t), b a Gaussian bump of
/// width σ centred on the switching point.
pub fn bangbang_1d_corrupted(cells: usize, kappa: f64, sigma: f64) -> Result<BangBangProblem> {
    let base = bangbang_1d(cells)?;
    let b = move |p: Point2| (-(p[0] - 0.5).powi(2) / (2.0 * sigma * sigma)).exp();
    Ok(BangBangProblem::with_kernel(base.field, move |s, t| -kappa * b(s) * b(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm2};
    use crate::soc::fonc_check;

    /// Projected gradient with a fixed step as an independent oracle.
    fn projected_gradient(p: &ControlProblem) -> Vec<f64> {
        let (q, c) = p.quadratic_form();
        let n = p.cells;
        let lmax: f64 = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let step = 1.0 / lmax;
        let mut u = vec![0.0; n];
        for _ in 0..200_000 {
            let g: Vec<f64> = (0..n).map(|i| dot(&q[i], &u) + c[i]).collect();
            u = u.iter().zip(&g).map(|(x, g)| (x - step * g).clamp(-1.0, 1.0)).collect();
        }
        u
    }

    #[test]
    fn active_set_solution_matches_projected_gradient() {
        let p = ControlProblem::new(20, 0.1);
        let u = p.solve().unwrap();
        let v = projected_gradient(&p);
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) < 1e-8, "{u:?}\n{v:?}");
        assert!(u.iter().any(|x| x.abs() == 1.0), "no active bound: {u:?}");
        assert!(u.iter().any(|x| x.abs() < 1.0));
        let prob = p.problem().unwrap();
        assert!(fonc_check(&prob.set, prob.objective.as_ref(), &prob.point).unwrap().holds());
    }

    #[test]
    fn examples_are_listed_once() {
        let mut names: Vec<&str> = EXAMPLES.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 7);
    }
}
