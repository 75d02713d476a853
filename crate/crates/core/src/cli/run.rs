use std::fmt::Write as _;

use serde_json::{json, Value};

use super::config::{Analysis, BuiltProblem, RunConfig};
use crate::bangbang::bangbang_no_gap;
use crate::curvature::CurvatureKind;
use crate::error::Result;
use crate::expr::Env;
use crate::linalg::Point2;
use crate::soc::{
    curvature_scan, fonc_check, growth_sample, ndc_check, no_gap_report, scan_directions, snc_scan, ssc_check,
    GrowthReport, SocReport, SscResult, Verdict, SNC_RESIDUAL_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILS: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Deterministic result of a run: the report payload, the growth samples as CSV, and the
/// exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Value,
    pub samples_csv: String,
    pub exit_code: i32,
    pub summary: String,
}

pub const CSV_HEADER: &str = "radius,l1_norm,ratio,sampler_tag";

pub fn samples_csv(growth: Option<&GrowthReport>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    if let Some(g) = growth {
        for s in &g.samples {
            let _ = writeln!(out, "{},{},{},{}", s.radius, s.l1_norm, s.ratio, s.sampler_tag.as_str());
        }
    }
    out
}

fn verdict_code(v: &Verdict) -> i32 {
    match v {
        Verdict::NoGapConsistent => EXIT_OK,
        Verdict::Inconsistent { .. } => EXIT_FAILS,
        Verdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn report_value(cfg: &RunConfig, r: &SocReport) -> Value {
    json!({
        "config_echo": cfg,
        "fonc": r.fonc,
        "ndc": r.ndc,
        "curvature": r.curvature,
        "snc": r.snc,
        "snc_hypothesis": r.snc_hypothesis,
        "ssc": r.ssc,
        "growth": r.growth,
        "verdict": r.verdict,
        "bangbang": r.bangbang,
        "diagnostics": r.diagnostics,
    })
}

fn empty_report(cfg: &RunConfig) -> Value {
    json!({
        "config_echo": cfg,
        "fonc": null,
        "ndc": null,
        "curvature": [],
        "snc": [],
        "ssc": null,
        "growth": null,
        "verdict": null,
        "diagnostics": [],
    })
}

/// Runs the configured analysis. Errors are returned only for problems that cannot be
/// built from the configuration; failures inside an analysis are reported in
/// `diagnostics` with exit code 3.
pub fn run_config(cfg: &RunConfig) -> Result<RunOutput> {
    let built = cfg.build()?;
    let (report, growth, exit_code) = match built {
        BuiltProblem::BangBang { problem, densities } => {
            let closures: Vec<Box<dyn Fn(Point2) -> f64 + Sync>> = densities
                .into_iter()
                .map(|e| Box::new(move |p: Point2| e.eval(&Env::xi(p))) as Box<dyn Fn(Point2) -> f64 + Sync>)
                .collect();
            let refs: Vec<&(dyn Fn(Point2) -> f64 + Sync)> = closures.iter().map(|b| b.as_ref()).collect();
            match bangbang_no_gap(&problem, &refs, &cfg.bangbang_config()) {
                Ok(r) => {
                    let code = verdict_code(&r.verdict);
                    (report_value(cfg, &r), r.growth, code)
                }
                Err(e) => {
                    let mut v = empty_report(cfg);
                    v["diagnostics"] = json!([e.to_string()]);
                    (v, None, EXIT_INCONCLUSIVE)
                }
            }
        }
        BuiltProblem::Finite(problem) => {
            let soc = cfg.soc_config();
            if cfg.analysis == Analysis::Full {
                let r = no_gap_report(&problem, &soc);
                let code = verdict_code(&r.verdict);
                (report_value(cfg, &r), r.growth, code)
            } else {
                let mut v = empty_report(cfg);
                let mut growth = None;
                let outcome: Result<i32> = (|| {
                    let fonc = fonc_check(&problem.set, problem.objective.as_ref(), &problem.point)?;
                    let holds = fonc.holds();
                    v["fonc"] = json!(fonc);
                    if cfg.analysis == Analysis::Fonc {
                        return Ok(if holds { EXIT_OK } else { EXIT_FAILS });
                    }
                    if cfg.analysis == Analysis::Growth {
                        let dirs = if holds { scan_directions(&problem, &soc)? } else { Vec::new() };
                        let g = growth_sample(&problem.set, problem.objective.as_ref(), &problem.point, &problem.norm, &dirs, &soc.growth)?;
                        let code = if g.fitted_c > 0.0 { EXIT_OK } else { EXIT_FAILS };
                        v["growth"] = json!(g);
                        growth = Some(g);
                        return Ok(code);
                    }
                    if !holds {
                        v["diagnostics"] = json!(["first-order condition fails; second-order analysis skipped"]);
                        return Ok(EXIT_FAILS);
                    }
                    let dirs = scan_directions(&problem, &soc)?;
                    match cfg.analysis {
                        Analysis::Curvature => {
                            let recs = curvature_scan(&problem, &dirs, &soc)?;
                            let code = if recs.iter().any(|r| r.curvature.value == CurvatureKind::Unresolved) {
                                EXIT_INCONCLUSIVE
                            } else {
                                EXIT_OK
                            };
                            v["curvature"] = json!(recs);
                            Ok(code)
                        }
                        Analysis::Snc => {
                            let res = snc_scan(&problem, cfg.scan.snc_c, &dirs, &soc)?;
                            let violated = res.iter().any(|r| match r.residual {
                                CurvatureKind::MinusInfinity => true,
                                CurvatureKind::Finite(x) => x < -SNC_RESIDUAL_TOL,
                                _ => false,
                            });
                            let code = if violated {
                                EXIT_FAILS
                            } else if res.iter().any(|r| r.inconclusive) {
                                EXIT_INCONCLUSIVE
                            } else {
                                EXIT_OK
                            };
                            v["snc"] = json!(res);
                            Ok(code)
                        }
                        Analysis::Ssc => {
                            let ndc = ndc_check(&problem, None);
                            let ssc = ssc_check(&problem, &dirs, &soc, &ndc)?;
                            let code = match &ssc {
                                SscResult::Holds { .. } => EXIT_OK,
                                SscResult::Fails { .. } => EXIT_FAILS,
                                SscResult::Inconclusive { .. } => EXIT_INCONCLUSIVE,
                            };
                            v["ndc"] = json!(ndc);
                            v["ssc"] = json!(ssc);
                            Ok(code)
                        }
                        _ => unreachable!("handled above or rejected on resolution"),
                    }
                })();
                let code = match outcome {
                    Ok(c) => c,
                    Err(e) => {
                        v["diagnostics"] = json!([e.to_string()]);
                        EXIT_INCONCLUSIVE
                    }
                };
                (v, growth, code)
            }
        }
    };
    let summary = summarize(cfg, &report, exit_code);
    Ok(RunOutput { samples_csv: samples_csv(growth.as_ref()), report, exit_code, summary })
}

fn summarize(cfg: &RunConfig, report: &Value, code: i32) -> String {
    let mut s = String::new();
    let name = if cfg.name.is_empty() { "run" } else { cfg.name.as_str() };
    let _ = writeln!(s, "{name}: analysis {:?}, exit {code}", cfg.analysis);
    if let Some(v) = report["verdict"]["status"].as_str() {
        let _ = writeln!(s, "  verdict: {v}");
    }
    if let Some(f) = report["fonc"]["status"].as_str() {
        let _ = writeln!(s, "  fonc: {f}");
    }
    if let Some(f) = report["ssc"]["status"].as_str() {
        let _ = writeln!(s, "  ssc: {f}");
    }
    if let Some(recs) = report["curvature"].as_array() {
        let values: Vec<String> = recs.iter().map(|r| r["curvature"]["value"].to_string()).collect();
        if !values.is_empty() {
            let _ = writeln!(s, "  curvature: {}", values.join(", "));
        }
    }
    if let Some(c) = report["growth"]["fitted_c"].as_f64() {
        let _ = writeln!(s, "  growth fitted_c: {c}");
    }
    if let Some(k) = report["bangbang"]["level_set"]["k_estimate"].as_f64() {
        let _ = writeln!(s, "  level-set constant K: {k}");
    }
    for d in report["diagnostics"].as_array().into_iter().flatten() {
        let _ = writeln!(s, "  note: {}", d.as_str().unwrap_or_default());
    }
    s
}
