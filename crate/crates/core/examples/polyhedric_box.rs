//! Curvature of a box at a face point: the brute-force estimator against the polyhedric
//! closed form (zero), along a few critical directions.

use curvlab::cones::{critical_cone_membership, ConeQuery};
use curvlab::curvature::{curvature_brute_force, curvature_closed_form, CurvatureConfig};
use curvlab::model::AdmissibleSet;
use curvlab::soc::critical_directions;

fn main() -> curvlab::Result<()> {
    let set = AdmissibleSet::boxed(vec![-1.0; 3], vec![1.0; 3])?;
    let x = [1.0, 0.2, -1.0];
    // φ must lie in −N_C(x): pushes outward on the first face, inward on the third.
    let phi = [-1.0, 0.0, 0.5];
    let q = ConeQuery::new(&set, &x)?.with_functional(&phi)?;
    let cfg = CurvatureConfig::default();
    for h in critical_directions(&q, 6)? {
        assert!(critical_cone_membership(&q, &h, 1e-8)?);
        let brute = curvature_brute_force(&set, &x, &phi, &h, &cfg)?;
        let exact = curvature_closed_form(&set, &x, &phi, &h)?;
        println!(
            "h = {:>7.3?}  brute force {:>12}  closed form {}",
            h,
            brute.value.label(),
            exact.value.label()
        );
    }
    Ok(())
}
