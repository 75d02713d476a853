//! The unit ball written as {‖u‖² − 1 ≤ 0}: the pullback formula Q(h) = 2λ‖h‖² against the
//! brute-force estimate, and the SSC threshold λ > ½ for J″ = −I.

use curvlab::curvature::{curvature_brute_force, curvature_pullback, CurvatureConfig};
use curvlab::model::AdmissibleSet;
use curvlab::problems::state_constrained_ball;
use curvlab::soc::{ndc_check, scan_directions, ssc_check, SocConfig};

fn main() -> curvlab::Result<()> {
    let h = [0.0, 1.0];
    for lambda in [0.25, 0.5, 1.0, 2.0] {
        let p = state_constrained_ball(lambda);
        let AdmissibleSet::LevelSet(ls) = &p.set else { unreachable!() };
        let phi = p.gradient();
        let pull = curvature_pullback(ls, &p.point, &phi, &[lambda], &h)?;
        let brute = curvature_brute_force(&p.set, &p.point, &phi, &h, &CurvatureConfig::default())?;
        let cfg = SocConfig::default();
        let dirs = scan_directions(&p, &cfg)?;
        let ssc = ssc_check(&p, &dirs, &cfg, &ndc_check(&p, None))?;
        println!(
            "lambda = {lambda:<4}  pullback {:<6}  brute force {:<22}  SSC holds: {}",
            pull.value.label(),
            brute.value.label(),
            ssc.holds()
        );
    }
    Ok(())
}
