//! Problem data: points and norms, grids, objectives, admissible sets.

mod grid;
mod objective;
mod sets;
mod vector;

pub use grid::Grid;
pub use objective::{
    check_objective, ConsistencyReport, FnObjective, Objective, Scaled, Smoothness,
    GRADIENT_REL_TOL, HESSIAN_REL_TOL, SYMMETRY_TOL,
};
pub use sets::{AdmissibleSet, ConstraintMap, ConvexSet, FnConstraintMap, LevelSet, Side};
pub use vector::{Norm, NormTag, Vector};

/// Default feasibility slack for analytically described sets.
pub const ANALYTIC_FEASIBILITY_TOL: f64 = 1e-10;
/// Default feasibility slack for grid functions.
pub const GRID_FEASIBILITY_TOL: f64 = 1e-8;

/// Membership of `x` in `set` with slack `tol`.
pub fn membership(set: &AdmissibleSet, x: &[f64], tol: f64) -> bool {
    set.contains(x, tol)
}

/// Consistency check of a level-set constraint map, component by component, with the
/// same tolerances as [`check_objective`].
pub fn check_constraint_map(
    map: &dyn ConstraintMap,
    points: &[Vec<f64>],
    random: usize,
    radius: f64,
    seed: u64,
) -> ConsistencyReport {
    let mut total = ConsistencyReport::default();
    for k in 0..map.dim_out() {
        let comp = Component { map, k };
        let rep = check_objective(&comp, points, random, radius, seed);
        total.points_checked += rep.points_checked;
        total.max_gradient_error = total.max_gradient_error.max(rep.max_gradient_error);
        total.max_hessian_error = total.max_hessian_error.max(rep.max_hessian_error);
        total.max_asymmetry = total.max_asymmetry.max(rep.max_asymmetry);
        total
            .failures
            .extend(rep.failures.into_iter().map(|f| format!("component {k}: {f}")));
    }
    total
}

struct Component<'a> {
    map: &'a dyn ConstraintMap,
    k: usize,
}

impl Objective for Component<'_> {
    fn dim(&self) -> usize {
        self.map.dim_in()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.map.value(x)[self.k]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.map.jacobian(x)[self.k].clone()
    }
    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        self.map.hessian_form(x, a, b)[self.k]
    }
}
