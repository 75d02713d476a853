//! Empirical quadratic growth: per-radius minima of 2(J(x) − J(x̄))/‖x − x̄‖² for a box QP,
//! the ball problem (c = 1 exactly on the boundary), and strip flips of a bang-bang control.

use curvlab::bangbang::strip_growth_sample;
use curvlab::problems::{bangbang_1d, box_qp, state_constrained_ball};
use curvlab::soc::{growth_sample, GrowthConfig, GrowthReport};

fn show(name: &str, g: &GrowthReport) {
    println!("{name}: fitted_c {:.6}, raw min {:.6}, {} samples", g.fitted_c, g.raw_min, g.sample_count);
    for (r, m) in g.radii.iter().zip(&g.per_radius_min) {
        println!("  radius {r:<8} min ratio {m:.6}");
    }
}

fn main() -> curvlab::Result<()> {
    let cfg = GrowthConfig::default();
    for (name, p) in [("box_qp", box_qp()), ("state_constrained_ball", state_constrained_ball(1.0))] {
        let g = growth_sample(&p.set, p.objective.as_ref(), &p.point, &p.norm, &[], &cfg)?;
        show(name, &g);
    }
    let strips = strip_growth_sample(&bangbang_1d(2048)?, &cfg)?;
    show("bangbang_1d (L1 distance)", &strips.report);
    println!("  first-order constant {:.6}", strips.first_order_c);
    Ok(())
}
