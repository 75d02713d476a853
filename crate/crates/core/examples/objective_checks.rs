//! Gradient and Hessian self-checks of the bundled objectives, and of an inline objective
//! given as an expression.

use std::sync::Arc;

use curvlab::expr::ExprObjective;
use curvlab::model::{check_objective, Objective};
use curvlab::problems::{box_qp, power_epigraph, state_constrained_ball, ControlProblem};

fn main() -> curvlab::Result<()> {
    let control = ControlProblem::new(20, 0.1);
    let inline = ExprObjective::new(2, "exp(x1*x2) + sin(x1)^2 - sqrt(1 + x2^2)")?;
    let cases: Vec<(&str, Arc<dyn Objective>, Vec<f64>)> = vec![
        ("box_qp", box_qp().objective, vec![1.0, 0.3]),
        ("control_constrained", Arc::new(control.objective()), vec![0.0; 20]),
        ("state_constrained_ball", state_constrained_ball(1.0).objective, vec![1.0, 0.0]),
        ("power_epigraph", power_epigraph(1.5, curvlab::model::Side::Above, 10.0)?.objective, vec![0.0, 0.0]),
        ("inline", Arc::new(inline), vec![0.3, -0.2]),
    ];
    for (name, obj, x) in &cases {
        let rep = check_objective(obj.as_ref(), std::slice::from_ref(x), 8, 0.5, 1);
        println!(
            "{name:<24} gradient err {:.1e}  hessian err {:.1e}  asymmetry {:.1e}  {}",
            rep.max_gradient_error,
            rep.max_hessian_error,
            rep.max_asymmetry,
            if rep.passed() { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
