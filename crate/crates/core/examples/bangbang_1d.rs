//! The canonical bang-bang problem φ̄ = ξ − ½ on (0, 1): zero set, level-set constant,
//! surface curvature, L¹ Taylor expansion and recovery-strip limits.

use curvlab::bangbang::{
    extract_zero_set, l1_taylor_check, level_set_constant, surface_curvature, verify_recovery_limits, GRAD_FLOOR,
};
use curvlab::problems::bangbang_1d;

fn main() -> curvlab::Result<()> {
    let p = bangbang_1d(2048)?;
    let field = &p.field;
    let sm = extract_zero_set(field, GRAD_FLOOR)?;
    println!("zero set: {:?} with |grad| = {:?}", sm.nodes, sm.grad_norm);

    let k = level_set_constant(field, 0.1, 6)?;
    println!("K estimate {:.6} (ratios {:?})", k.k_estimate, k.ratios);

    let g = sm.with_density(&|_| 2.0);
    println!("surface curvature for g = 2: {}", surface_curvature(&g)?);

    let v: Vec<f64> = vec![1.0; field.grid().len()];
    let schedule: Vec<f64> = (2..=12).map(|k| 0.5f64.powi(k)).collect();
    let taylor = l1_taylor_check(field, &sm, &v, &schedule)?;
    println!("L1 Taylor residual, max over schedule: {:.2e}", taylor.max_abs_residual);

    let one = |_: [f64; 2]| 1.0;
    let xi = |p: [f64; 2]| p[0];
    let limits = verify_recovery_limits(field, &g, &[1e-2, 3e-3, 1e-3], &[&one, &xi])?;
    for row in &limits.rows {
        println!("t = {:.0e}: <h_t, v> = {:?}, |h_t|_1 = {:.6}, <phi, 2h_t/t> = {:.6}", row.t, row.limit11, row.limit12, row.limit22);
    }
    println!(
        "targets {:?}, {}, {}; final relative error {:.2e}",
        limits.target11,
        limits.target12,
        limits.target22,
        limits.final_relative_error()
    );
    Ok(())
}
