//! Acceptance suite: one line per criterion with its runtime, non-zero exit on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvlab::bangbang::{
    bangbang_no_gap, extract_zero_set, l1_taylor_check, level_set_constant, surface_curvature, verify_recovery_limits,
    BangBangConfig, GRAD_FLOOR,
};
use curvlab::cli::{run_config, BuiltProblem, ProblemConfig, RunConfig, EXIT_FAILS};
use curvlab::cones::{critical_cone_membership, second_order_tangent_set, tangent_cone_membership, ConeQuery, SecondOrderTangentSet};
use curvlab::curvature::{curvature_brute_force, curvature_pullback, CurvatureConfig, CurvatureKind};
use curvlab::expr::Env;
use curvlab::model::{check_objective, AdmissibleSet, ConvexSet, Objective, Scaled};
use curvlab::problems::{bangbang_1d, bangbang_1d_corrupted, bangbang_2d_circle, example, state_constrained_ball, EXAMPLES};
use curvlab::soc::{curvature_scan, no_gap_report, scan_directions, Problem, SamplerTag, SocReport};
use curvlab::Error;

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err(e: Error) -> String {
    e.to_string()
}

fn load(name: &str, overrides: &[&str]) -> RunConfig {
    let ex = example(name).expect("bundled example");
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::load(ex.config, &o).expect("bundled config loads")
}

fn finite_problem(cfg: &RunConfig) -> Problem {
    match cfg.build().expect("builds") {
        BuiltProblem::Finite(p) => p,
        BuiltProblem::BangBang { .. } => panic!("expected a finite-dimensional problem"),
    }
}

fn polyhedric_box() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = CurvatureConfig::default();
    let mut query = 0;
    while query < 50 {
        let n = rng.gen_range(1..=5);
        let set = AdmissibleSet::boxed(vec![-1.0; n], vec![1.0; n]).map_err(err)?;
        let mut x = vec![0.0; n];
        let mut phi = vec![0.0; n];
        for i in 0..n {
            match rng.gen_range(0..3) {
                0 => {
                    x[i] = 1.0;
                    phi[i] = if rng.gen_bool(0.3) { 0.0 } else { -rng.gen_range(0.1..2.0) };
                }
                1 => {
                    x[i] = -1.0;
                    phi[i] = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.1..2.0) };
                }
                _ => x[i] = rng.gen_range(-0.9..0.9),
            }
        }
        let q = ConeQuery::new(&set, &x).and_then(|q| q.with_functional(&phi)).map_err(err)?;
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = q.project_critical(&v).map_err(err)?;
        if h.iter().map(|c| c * c).sum::<f64>().sqrt() < 1e-6 {
            continue;
        }
        query += 1;
        ensure!(critical_cone_membership(&q, &h, 1e-8).map_err(err)?, "query {query}: h not critical");
        let value = curvature_brute_force(&set, &x, &phi, &h, &cfg).map_err(err)?.value;
        match value {
            CurvatureKind::Finite(v) => ensure!(v.abs() <= 1e-6, "query {query}: Q = {v}"),
            other => return Err(format!("query {query}: Q = {}", other.label())),
        }
    }
    Ok(())
}

fn power_epigraph_infinities() -> Result<(), String> {
    let cfg = load("power_epigraph", &[]);
    let report = no_gap_report(&finite_problem(&cfg), &cfg.soc_config());
    ensure!(!report.curvature.is_empty(), "no critical directions");
    for r in &report.curvature {
        ensure!(r.curvature.value == CurvatureKind::PlusInfinity, "{}: {}", r.label, r.curvature.value.label());
    }
    ensure!(report.ssc.holds(), "SSC: {:?}", report.ssc);
    let c = report.growth.as_ref().map_or(f64::NAN, |g| g.fitted_c);
    ensure!(c > 0.0, "fitted_c = {c}");

    let cfg = load("power_epigraph_flipped", &[]);
    let report = no_gap_report(&finite_problem(&cfg), &cfg.soc_config());
    ensure!(!report.curvature.is_empty(), "no critical directions (flipped)");
    for r in &report.curvature {
        ensure!(r.curvature.value == CurvatureKind::MinusInfinity, "{}: {}", r.label, r.curvature.value.label());
    }
    let out = run_config(&cfg).map_err(err)?;
    ensure!(out.exit_code == EXIT_FAILS, "flipped exit code {}", out.exit_code);
    Ok(())
}

fn ball_pullback() -> Result<(), String> {
    for lambda in [0.5, 1.0, 2.0] {
        let p = state_constrained_ball(lambda);
        let AdmissibleSet::LevelSet(ls) = &p.set else { unreachable!() };
        let phi = p.gradient();
        for h in [[0.0, 1.0], [0.0, -0.5], [0.0, 2.0]] {
            let norm_sq = h[0] * h[0] + h[1] * h[1];
            let expected = 2.0 * lambda * norm_sq;
            let pull = curvature_pullback(ls, &p.point, &phi, &[lambda], &h).map_err(err)?.value;
            let brute = curvature_brute_force(&p.set, &p.point, &phi, &h, &CurvatureConfig::default()).map_err(err)?.value;
            let pull = pull.finite().ok_or("pullback not finite")?;
            let brute = brute.finite().ok_or("brute force not finite")?;
            ensure!((pull - expected).abs() <= 1e-12 * expected, "lambda {lambda}, h {h:?}: pullback {pull} vs {expected}");
            ensure!((brute - pull).abs() <= 0.01 * pull, "lambda {lambda}, h {h:?}: brute {brute} vs pullback {pull}");
        }
    }
    Ok(())
}

fn second_order_tables() -> Result<(), String> {
    let k = ConvexSet::NonPositive;
    for z in [-1.0, 0.0, 1.0] {
        for h in [-1.0, 0.0, 1.0] {
            let got = second_order_tangent_set(&k, &[z], &[h]);
            let ok = match (z, h) {
                (z, _) if z > 0.0 => matches!(got, Err(Error::Domain(_))),
                (z, _) if z < 0.0 => got == Ok(SecondOrderTangentSet::AllSpace { dim: 1 }),
                (_, h) if h < 0.0 => got == Ok(SecondOrderTangentSet::AllSpace { dim: 1 }),
                (_, h) if h == 0.0 => got == Ok(SecondOrderTangentSet::HalfLineNonPos),
                _ => matches!(got, Err(Error::Domain(_))),
            };
            ensure!(ok, "z = {z}, h = {h}: {got:?}");
        }
    }
    let set = AdmissibleSet::Convex(ConvexSet::NonPositive);
    for (z, h, inside) in [(-1.0, 1.0, true), (-1.0, -1.0, true), (0.0, -1.0, true), (0.0, 0.0, true), (0.0, 1.0, false)] {
        let q = ConeQuery::new(&set, &[z]).map_err(err)?;
        let got = tangent_cone_membership(&q, &[h]).map_err(err)?;
        ensure!(got == inside, "T_K({z}) contains {h}: {got}");
    }
    Ok(())
}

fn canonical_1d() -> Result<(), String> {
    let p = bangbang_1d(2048).map_err(err)?;
    let field = &p.field;
    let sm = extract_zero_set(field, GRAD_FLOOR).map_err(err)?;
    let k = level_set_constant(field, 0.1, 6).map_err(err)?.k_estimate;
    ensure!((k - 0.125).abs() <= 1e-3, "K = {k}");
    let g = sm.with_density(&|_| 2.0);
    let q = surface_curvature(&g).map_err(err)?;
    ensure!((q - 2.0).abs() <= 1e-3, "surface curvature {q}");
    let v = vec![1.0; field.grid().len()];
    let schedule: Vec<f64> = (2..=12).map(|k| 0.5f64.powi(k)).collect();
    let taylor = l1_taylor_check(field, &sm, &v, &schedule).map_err(err)?;
    for row in &taylor.rows {
        ensure!(row.residual.abs() < 1e-6, "Taylor residual {} at t = {}", row.residual, row.t);
    }
    let one = |_: [f64; 2]| 1.0;
    let xi = |p: [f64; 2]| p[0];
    let limits = verify_recovery_limits(field, &g, &[1e-2, 3e-3, 1e-3], &[&one, &xi]).map_err(err)?;
    let e = limits.final_relative_error();
    ensure!(e <= 0.01, "recovery limits relative error {e} at t = 1e-3");
    Ok(())
}

fn circle_2d() -> Result<(), String> {
    let p = bangbang_2d_circle(256).map_err(err)?;
    let sm = extract_zero_set(&p.field, GRAD_FLOOR).map_err(err)?;
    let len = sm.total_weight();
    ensure!((len - PI).abs() <= 0.01 * PI, "length {len}");
    let k = level_set_constant(&p.field, 0.05, 4).map_err(err)?.k_estimate;
    let target = 1.0 / (8.0 * PI);
    ensure!((k - target).abs() <= 0.01 * target, "K = {k} vs {target}");
    let q = surface_curvature(&sm.with_density(&|_| 1.0)).map_err(err)?;
    ensure!((q - PI / 2.0).abs() <= 0.01 * PI / 2.0, "surface curvature {q}");
    Ok(())
}

fn random_density(rng: &mut ChaCha8Rng) -> impl Fn([f64; 2]) -> f64 {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let w = rng.gen_range(1.0..6.0);
    move |p: [f64; 2]| c[0] + c[1] * p[0] + c[2] * p[1] + c[3] * (w * (p[0] - p[1])).sin()
}

fn fundamental_estimate() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let one_d = bangbang_1d(2048).map_err(err)?;
    let circle = bangbang_2d_circle(256).map_err(err)?;
    let cases = [(&one_d, 0.1, 6), (&circle, 0.05, 4)];
    for (p, s_max, levels) in cases {
        let sm = extract_zero_set(&p.field, GRAD_FLOOR).map_err(err)?;
        let k = level_set_constant(&p.field, s_max, levels).map_err(err)?.k_estimate;
        for i in 0..10 {
            let g = random_density(&mut rng);
            let gm = sm.with_density(&g);
            let q = surface_curvature(&gm).map_err(err)?;
            let tv = gm.total_variation().map_err(err)?;
            ensure!(q >= k * tv * tv * 0.99, "density {i}: Q = {q} < K (int|g|)^2 = {}", k * tv * tv);
        }
    }
    Ok(())
}

fn strip_growth() -> Result<(), String> {
    let one = |_: [f64; 2]| 1.0;
    let linear = bangbang_1d(2048).map_err(err)?;
    let r = bangbang_no_gap(&linear, &[&one], &BangBangConfig::default()).map_err(err)?;
    ensure!(r.ssc.holds(), "linear SSC: {:?}", r.ssc);
    let c = r.growth.as_ref().map_or(f64::NAN, |g| g.fitted_c);
    ensure!((c - 0.25).abs() <= 0.05 * 0.25, "linear fitted_c {c}");

    let corrupted = bangbang_1d_corrupted(2048, 2.0, 0.05).map_err(err)?;
    let r = bangbang_no_gap(&corrupted, &[&one], &BangBangConfig::default()).map_err(err)?;
    ensure!(r.ssc.fails(), "corrupted SSC: {:?}", r.ssc);
    let g = r.growth.as_ref().ok_or("no growth report")?;
    let min = g
        .samples
        .iter()
        .filter(|s| matches!(s.sampler_tag, SamplerTag::StripCentered | SamplerTag::StripOneSided | SamplerTag::StripOffset))
        .map(|s| s.ratio)
        .fold(f64::INFINITY, f64::min);
    ensure!(min < 1e-3, "smallest corrupted ratio {min}");
    Ok(())
}

fn scaled_problem(p: &Problem, factor: f64) -> Problem {
    let objective: Arc<dyn Objective> = Arc::new(Scaled { factor, inner: p.objective.clone() });
    Problem { set: p.set.clone(), objective, point: p.point.clone(), norm: p.norm.clone() }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn same_kind_scaled(a: CurvatureKind, b: CurvatureKind, factor: f64, rel: f64) -> bool {
    match (a, b) {
        (CurvatureKind::Finite(x), CurvatureKind::Finite(y)) => close(factor * x, y, rel),
        (x, y) => x == y,
    }
}

fn booleans(r: &SocReport) -> (Option<bool>, Option<bool>, bool, bool, &'static str) {
    (r.fonc.as_ref().map(|f| f.holds()), r.ndc.as_ref().map(|n| n.established()), r.ssc.holds(), r.ssc.fails(), r.verdict.label())
}

fn check_scaled_reports(name: &str, base: &SocReport, doubled: &SocReport) -> Result<(), String> {
    ensure!(booleans(base) == booleans(doubled), "{name}: {:?} vs {:?}", booleans(base), booleans(doubled));
    let (c1, c2) = (base.growth.as_ref().map(|g| g.fitted_c), doubled.growth.as_ref().map(|g| g.fitted_c));
    match (c1, c2) {
        (Some(a), Some(b)) => ensure!(close(2.0 * a, b, 1e-6), "{name}: fitted_c {a} vs doubled {b}"),
        (a, b) => ensure!(a.is_none() && b.is_none(), "{name}: growth present in only one report"),
    }
    ensure!(base.snc.len() == doubled.snc.len(), "{name}: SNC lengths differ");
    for (a, b) in base.snc.iter().zip(&doubled.snc) {
        ensure!(same_kind_scaled(a.residual, b.residual, 2.0, 1e-6), "{name}: SNC {} vs {}", a.residual.label(), b.residual.label());
    }
    Ok(())
}

fn invariants() -> Result<(), String> {
    for ex in EXAMPLES.iter() {
        let cfg = load(ex.name, &[]);
        match cfg.build().map_err(err)? {
            BuiltProblem::Finite(p) => {
                let soc = cfg.soc_config();
                let dirs = scan_directions(&p, &soc).map_err(err)?;
                let base = curvature_scan(&p, &dirs, &soc).map_err(err)?;
                for alpha in [0.5, 2.0] {
                    let scaled: Vec<Vec<f64>> = dirs.iter().map(|d| d.iter().map(|c| alpha * c).collect()).collect();
                    let recs = curvature_scan(&p, &scaled, &soc).map_err(err)?;
                    for (a, b) in base.iter().zip(&recs) {
                        ensure!(
                            same_kind_scaled(a.curvature.value, b.curvature.value, alpha * alpha, 1e-2),
                            "{}: Q({alpha} h) = {} vs Q(h) = {}",
                            ex.name,
                            b.curvature.value.label(),
                            a.curvature.value.label()
                        );
                    }
                }
                if ex.name != "power_epigraph_flipped" {
                    for r in &base {
                        let ok = match r.curvature.value {
                            CurvatureKind::Finite(v) => v >= -1e-6,
                            CurvatureKind::PlusInfinity => true,
                            _ => false,
                        };
                        ensure!(ok, "{}: convex set with Q = {}", ex.name, r.curvature.value.label());
                    }
                }
                let report = no_gap_report(&p, &soc);
                let doubled = no_gap_report(&scaled_problem(&p, 2.0), &soc);
                check_scaled_reports(ex.name, &report, &doubled)?;
            }
            BuiltProblem::BangBang { problem, .. } => {
                let sm = extract_zero_set(&problem.field, GRAD_FLOOR).map_err(err)?;
                let g = |p: [f64; 2]| 1.0 + 0.5 * p[0] - 0.25 * p[1];
                let q1 = surface_curvature(&sm.with_density(&g)).map_err(err)?;
                ensure!(q1 >= 0.0, "{}: surface curvature {q1}", ex.name);
                for alpha in [0.5, 2.0] {
                    let qa = surface_curvature(&sm.with_density(&|p| alpha * g(p))).map_err(err)?;
                    ensure!(close(alpha * alpha * q1, qa, 1e-12), "{}: Q({alpha} g) = {qa} vs {q1}", ex.name);
                }
                let src = adjoint_source(&cfg);
                let doubled_cfg = load(ex.name, &[&format!("problem.adjoint=2*({src})")]);
                let run = |c: &RunConfig| -> Result<SocReport, String> {
                    let BuiltProblem::BangBang { problem, densities } = c.build().map_err(err)? else { unreachable!() };
                    let closures: Vec<Box<dyn Fn([f64; 2]) -> f64 + Sync>> = densities
                        .into_iter()
                        .map(|e| Box::new(move |p: [f64; 2]| e.eval(&Env::xi(p))) as Box<dyn Fn([f64; 2]) -> f64 + Sync>)
                        .collect();
                    let refs: Vec<&(dyn Fn([f64; 2]) -> f64 + Sync)> = closures.iter().map(|b| b.as_ref()).collect();
                    bangbang_no_gap(&problem, &refs, &c.bangbang_config()).map_err(err)
                };
                check_scaled_reports(ex.name, &run(&cfg)?, &run(&doubled_cfg)?)?;
            }
        }
        let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool");
        let single = pool(1).install(|| run_config(&cfg)).map_err(err)?;
        let multi = pool(8).install(|| run_config(&cfg)).map_err(err)?;
        ensure!(
            serde_json::to_string(&single.report).unwrap() == serde_json::to_string(&multi.report).unwrap(),
            "{}: report differs between 1 and 8 threads",
            ex.name
        );
        ensure!(single.samples_csv == multi.samples_csv, "{}: samples differ between 1 and 8 threads", ex.name);
        ensure!(single.exit_code == multi.exit_code, "{}: exit codes differ", ex.name);
    }
    Ok(())
}

fn adjoint_source(cfg: &RunConfig) -> String {
    match &cfg.problem {
        ProblemConfig::BangBang { adjoint, .. } => adjoint.clone(),
        _ => panic!("not a bang-bang configuration"),
    }
}

fn objective_checks() -> Result<(), String> {
    for ex in EXAMPLES.iter() {
        // Grid objectives are checked on a coarse version of the same grid: the check is
        // quadratic in the number of unknowns.
        let cfg = match ex.name {
            "bangbang_1d" => load(ex.name, &["grid.cells=64"]),
            "bangbang_2d_circle" => load(ex.name, &["grid.cells=8"]),
            _ => load(ex.name, &[]),
        };
        let (obj, x): (Arc<dyn Objective>, Vec<f64>) = match cfg.build().map_err(err)? {
            BuiltProblem::Finite(p) => (p.objective.clone(), p.point.clone()),
            BuiltProblem::BangBang { problem, .. } => {
                let j = problem.objective();
                let x = problem.field.control();
                (Arc::new(j), x)
            }
        };
        let rep = check_objective(obj.as_ref(), &[x], 4, 0.25, 3);
        ensure!(rep.passed(), "{}: {:?}", ex.name, rep.failures.first());
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, Check, u64); 10] = [
        ("polyhedric box curvature vanishes on critical directions", polyhedric_box, 10),
        ("power epigraph curvature is +infinity, hypograph -infinity", power_epigraph_infinities, 60),
        ("ball pullback curvature 2*lambda*|h|^2 matches brute force", ball_pullback, 30),
        ("second-order tangent sets of the nonpositive half-line", second_order_tables, 1),
        ("canonical 1d bang-bang: K, curvature, Taylor, recovery limits", canonical_1d, 20),
        ("circle zero set: length, K and surface curvature", circle_2d, 60),
        ("fundamental estimate over random densities", fundamental_estimate, 60),
        ("strip growth: linear consistent, corrupted kernel fails", strip_growth, 60),
        ("invariants over bundled examples", invariants, 120),
        ("objective self-checks over bundled examples", objective_checks, 5),
    ];
    let mut failed = 0;
    for (i, (label, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed > Duration::from_secs(*limit) {
                Err(format!("took {:.1}s, limit {limit}s", elapsed.as_secs_f64()))
            } else {
                Ok(())
            }
        });
        match outcome {
            Ok(()) => println!("criterion {:>2} PASS ({:>6.2}s) {label}", i + 1, elapsed.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL ({:>6.2}s) {label}: {e}", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
