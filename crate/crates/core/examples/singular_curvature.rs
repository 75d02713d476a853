//! The epigraph and hypograph of |x₁|^1.5 at the origin: curvature +∞ on one side and
//! −∞ on the other, which decides local optimality of x₂ − 10x₁² resp. −x₂ − 10x₁².

use curvlab::curvature::{curvature_brute_force, CurvatureConfig};
use curvlab::model::Side;
use curvlab::problems::power_epigraph;
use curvlab::soc::{no_gap_report, SocConfig};

fn main() -> curvlab::Result<()> {
    let mut cfg = SocConfig::default();
    cfg.growth.eps_schedule = vec![4e-3, 2e-3, 1e-3, 5e-4];
    for side in [Side::Above, Side::Below] {
        let p = power_epigraph(1.5, side, 10.0)?;
        let phi = p.gradient();
        let q = curvature_brute_force(&p.set, &p.point, &phi, &[1.0, 0.0], &CurvatureConfig::default())?;
        println!("{side:?}: Q(e1) = {}", q.value.label());
        for row in q.diagnostics.iter().step_by(5) {
            let best = row.best.map_or("infeasible".to_string(), |b| format!("{b:.4e}"));
            println!("  t = {:.3e}  best <phi, r> = {best}", row.t);
        }
        let report = no_gap_report(&p, &cfg);
        println!(
            "  verdict {}  growth fitted_c = {:.4}",
            report.verdict.label(),
            report.growth.as_ref().map_or(f64::NAN, |g| g.fitted_c)
        );
    }
    Ok(())
}
