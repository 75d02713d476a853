//! φ̄ = ξ₁² + ξ₂² − ¼ on (−1, 1)²: marching-squares zero set (a circle of length π), the
//! level-set constant 1/(8π), and the no-gap report with strip growth.

use curvlab::bangbang::{bangbang_no_gap, extract_zero_set, surface_curvature, BangBangConfig, GRAD_FLOOR};
use curvlab::problems::bangbang_2d_circle;

fn main() -> curvlab::Result<()> {
    let p = bangbang_2d_circle(256)?;
    let sm = extract_zero_set(&p.field, GRAD_FLOOR)?;
    println!("zero set: {} segments, length {:.6} (pi = {:.6})", sm.len(), sm.total_weight(), std::f64::consts::PI);
    println!("surface curvature for g = 1: {:.6}", surface_curvature(&sm.with_density(&|_| 1.0))?);

    let cfg = BangBangConfig { s_max: 0.05, levels: 4, ..Default::default() };
    let one = |_: [f64; 2]| 1.0;
    let tilted = |q: [f64; 2]| 1.0 + q[0];
    let report = bangbang_no_gap(&p, &[&one, &tilted], &cfg)?;
    let bb = report.bangbang.as_ref().expect("bang-bang details");
    println!("K estimate {:.6} (1/(8 pi) = {:.6})", bb.level_set.k_estimate, 1.0 / (8.0 * std::f64::consts::PI));
    println!("SSC: {:?}", report.ssc);
    println!("growth fitted_c {:.5}", report.growth.as_ref().map_or(f64::NAN, |g| g.fitted_c));
    println!("verdict: {}", report.verdict.label());
    Ok(())
}
