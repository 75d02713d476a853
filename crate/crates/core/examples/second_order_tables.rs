//! Tangent cones and second-order tangent sets of K = (−∞, 0] at all (z, h) pairs, and of
//! the unit ball, with the resulting infima of ⟨φ, r⟩.

use curvlab::cones::second_order_tangent_set;
use curvlab::model::ConvexSet;

fn main() {
    let k = ConvexSet::NonPositive;
    for z in [-1.0, 0.0, 1.0] {
        for h in [-1.0, 0.0, 1.0] {
            match second_order_tangent_set(&k, &[z], &[h]) {
                Ok(t2) => println!("z = {z:>4}, h = {h:>4}:  T² = {t2:?},  inf r = {}", t2.inf_linear(&[1.0]).label()),
                Err(e) => println!("z = {z:>4}, h = {h:>4}:  {e}"),
            }
        }
    }
    let ball = ConvexSet::UnitBall { dim: 2 };
    let t2 = second_order_tangent_set(&ball, &[1.0, 0.0], &[0.0, 2.0]).expect("tangential direction");
    println!("unit ball at (1,0), h = (0,2):  T² = {t2:?}");
    println!("  inf <(-3, 0), r> = {}", t2.inf_linear(&[-3.0, 0.0]).label());
}
