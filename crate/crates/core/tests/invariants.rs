use proptest::prelude::*;

use curvlab::bangbang::{extract_zero_set, surface_curvature, GRAD_FLOOR};
use curvlab::cones::{critical_cone_membership, ConeQuery};
use curvlab::curvature::{curvature_brute_force, CurvatureConfig, CurvatureKind};
use curvlab::expr::{Env, Expr, Var};
use curvlab::model::AdmissibleSet;
use curvlab::problems::{bangbang_1d, bangbang_2d_circle};
use curvlab::soc::trimmed_min;

fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        (-3.0f64..3.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3*{a})")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}

/// Random box with a face point x, a functional φ ∈ −N_C(x) and a direction in the
/// critical cone.
fn box_query() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..3, 0.1f64..2.0, -0.9f64..0.9), n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(|(coords, v)| {
                let mut x = Vec::new();
                let mut phi = Vec::new();
                for (face, w, interior) in coords {
                    match face {
                        0 => {
                            x.push(1.0);
                            phi.push(-w);
                        }
                        1 => {
                            x.push(-1.0);
                            phi.push(0.0);
                        }
                        _ => {
                            x.push(interior);
                            phi.push(0.0);
                        }
                    }
                }
                (x, phi, v)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivatives_match_central_differences(src in expr_source(), x1 in -1.0f64..1.0, x2 in -1.0f64..1.0) {
        let e = Expr::parse(&src).unwrap();
        for (k, var) in [Var::X(0), Var::X(1)].into_iter().enumerate() {
            let d = e.diff(var);
            let at = |p: [f64; 2]| e.eval(&Env { x: &p, xi: [0.0; 2], eta: [0.0; 2] });
            let step = 1e-6;
            let (mut lo, mut hi) = ([x1, x2], [x1, x2]);
            lo[k] -= step;
            hi[k] += step;
            let fd = (at(hi) - at(lo)) / (2.0 * step);
            let exact = d.eval(&Env { x: &[x1, x2], xi: [0.0; 2], eta: [0.0; 2] });
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{src}: d/dx{} = {exact} vs {fd}", k + 1);
        }
    }

    #[test]
    fn critical_projection_is_a_moreau_split((x, phi, v) in box_query()) {
        let n = x.len();
        let set = AdmissibleSet::boxed(vec![-1.0; n], vec![1.0; n]).unwrap();
        let q = ConeQuery::new(&set, &x).unwrap().with_functional(&phi).unwrap();
        let p = q.project_critical(&v).unwrap();
        prop_assert!(critical_cone_membership(&q, &p, 1e-8).unwrap());
        let residual: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
        let cross: f64 = residual.iter().zip(&p).map(|(a, b)| a * b).sum();
        prop_assert!(cross.abs() <= 1e-9);
        let q2 = q.project_critical(&p).unwrap();
        for (a, b) in p.iter().zip(&q2) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn surface_curvature_is_quadratic_and_nonnegative(c in prop::collection::vec(-2.0f64..2.0, 3), alpha in -3.0f64..3.0) {
        let g = move |p: [f64; 2]| c[0] + c[1] * p[0] + c[2] * p[1];
        for problem in [bangbang_1d(256).unwrap(), bangbang_2d_circle(64).unwrap()] {
            let sm = extract_zero_set(&problem.field, GRAD_FLOOR).unwrap();
            let q = surface_curvature(&sm.with_density(&g)).unwrap();
            let qa = surface_curvature(&sm.with_density(&|p| alpha * g(p))).unwrap();
            prop_assert!(q >= 0.0);
            prop_assert!((qa - alpha * alpha * q).abs() <= 1e-12 * (1.0 + q));
        }
    }

    #[test]
    fn trimmed_min_bounds(ratios in prop::collection::vec(-10.0f64..10.0, 1..400)) {
        let (trimmed, raw) = trimmed_min(&ratios);
        let below = ratios.iter().filter(|r| **r < trimmed).count();
        prop_assert!(raw <= trimmed);
        prop_assert!(raw == ratios.iter().copied().fold(f64::INFINITY, f64::min));
        prop_assert!(below <= ratios.len() / 100);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn box_curvature_is_homogeneous_and_nonnegative((x, phi, v) in box_query(), alpha in 0.2f64..4.0) {
        let n = x.len();
        let set = AdmissibleSet::boxed(vec![-1.0; n], vec![1.0; n]).unwrap();
        let q = ConeQuery::new(&set, &x).unwrap().with_functional(&phi).unwrap();
        let h = q.project_critical(&v).unwrap();
        prop_assume!(h.iter().map(|c| c * c).sum::<f64>() > 1e-8);
        let cfg = CurvatureConfig { k_max: 12, ..Default::default() };
        let scaled: Vec<f64> = h.iter().map(|c| alpha * c).collect();
        let base = curvature_brute_force(&set, &x, &phi, &h, &cfg).unwrap().value;
        let other = curvature_brute_force(&set, &x, &phi, &scaled, &cfg).unwrap().value;
        match (base, other) {
            (CurvatureKind::Finite(a), CurvatureKind::Finite(b)) => {
                prop_assert!(a >= -1e-6, "Q = {a}");
                prop_assert!((b - alpha * alpha * a).abs() <= 1e-6 * (1.0 + alpha * alpha));
            }
            other => prop_assert!(false, "{other:?}"),
        }
    }
}
