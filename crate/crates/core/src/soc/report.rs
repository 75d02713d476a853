use serde::Serialize;

use super::{
    curvature_scan, fonc_check, growth_sample, ndc_check, scan_directions, snc_residuals, ssc_from_records,
    CurvatureRecord, FoncResult, GrowthReport, NdcResult, Problem, SncHypothesis, SncResidual, SocConfig, SscResult,
    SNC_RESIDUAL_TOL,
};
use crate::bangbang::BangBangDetails;
use crate::curvature::CurvatureKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    /// SSC holds, the sampled growth constant is positive and no SNC residual is negative.
    NoGapConsistent,
    /// The checks contradict local optimality of x̄ (or each other) at sample resolution.
    Inconsistent { details: Vec<String> },
    Inconclusive { reasons: Vec<String> },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::NoGapConsistent => "no_gap_consistent",
            Verdict::Inconsistent { .. } => "inconsistent",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocReport {
    pub fonc: Option<FoncResult>,
    pub ndc: Option<NdcResult>,
    pub curvature: Vec<CurvatureRecord>,
    pub snc: Vec<SncResidual>,
    pub snc_hypothesis: SncHypothesis,
    pub ssc: SscResult,
    pub growth: Option<GrowthReport>,
    pub verdict: Verdict,
    pub bangbang: Option<BangBangDetails>,
    pub diagnostics: Vec<String>,
}

/// Combines the individual checks into a verdict. Growth and SSC are compared in both
/// directions of the no-gap equivalence, at the resolution of the samples.
pub fn render_verdict(
    fonc: Option<&FoncResult>,
    ndc: Option<&NdcResult>,
    snc: &[SncResidual],
    ssc: &SscResult,
    growth: Option<&GrowthReport>,
) -> Verdict {
    let mut bad = Vec::new();
    let mut open = Vec::new();
    match fonc {
        Some(FoncResult::Fails { .. }) => bad.push("first-order condition fails".to_string()),
        Some(FoncResult::Holds) => {}
        None => open.push("first-order condition not evaluated".to_string()),
    }
    if let Some(r) = snc.iter().find(|r| r.residual == CurvatureKind::MinusInfinity) {
        bad.push(format!("curvature is -infinity along {}: necessary condition violated", r.label));
    }
    let fitted = growth.map(|g| g.fitted_c).filter(|c| c.is_finite());
    match fitted {
        Some(c) => {
            if ssc.holds() && !ssc.advisory() && c <= 0.0 {
                bad.push(format!("SSC holds but the sampled growth constant is {c:e}"));
            }
            if c > 0.0 {
                if let Some(r) = snc.iter().find(|r| matches!(r.residual, CurvatureKind::Finite(v) if v < -SNC_RESIDUAL_TOL)) {
                    bad.push(format!("growth constant {c:e} but SNC residual along {} is {}", r.label, r.residual.label()));
                }
            }
            if ssc.fails() && c <= 0.0 {
                bad.push(format!("SSC fails and the sampler finds no quadratic growth (fitted c = {c:e})"));
            }
        }
        None => open.push("no growth samples".to_string()),
    }
    if !bad.is_empty() {
        return Verdict::Inconsistent { details: bad };
    }
    if !ndc.is_some_and(|n| n.established()) {
        open.push("non-degeneracy condition not established".to_string());
    }
    match ssc {
        SscResult::Holds { .. } => {}
        SscResult::Fails { .. } => open.push("SSC fails while growth is positive".to_string()),
        SscResult::Inconclusive { reason } => open.push(reason.clone()),
    }
    if snc.iter().any(|r| r.inconclusive) {
        open.push("some curvature values are unresolved".to_string());
    }
    if open.is_empty() {
        Verdict::NoGapConsistent
    } else {
        Verdict::Inconclusive { reasons: open }
    }
}

fn inconclusive(msg: String) -> SscResult {
    SscResult::Inconclusive { reason: msg }
}

/// Runs FONC, NDC, the curvature scan (SNC and SSC), and the growth sampler at x̄, and
/// renders the verdict. Errors of individual stages end up in `diagnostics`.
pub fn no_gap_report(problem: &Problem, cfg: &SocConfig) -> SocReport {
    let mut diagnostics = Vec::new();
    let mut report = SocReport {
        fonc: None,
        ndc: None,
        curvature: Vec::new(),
        snc: Vec::new(),
        snc_hypothesis: cfg.snc_hypothesis,
        ssc: inconclusive("not evaluated".into()),
        growth: None,
        verdict: Verdict::Inconclusive { reasons: vec![] },
        bangbang: None,
        diagnostics: Vec::new(),
    };
    if !problem.set.contains(&problem.point, problem.set.default_tolerance()) {
        let msg = "structural error: candidate point is not feasible".to_string();
        report.ssc = inconclusive(msg.clone());
        report.verdict = Verdict::Inconclusive { reasons: vec![msg.clone()] };
        report.diagnostics.push(msg);
        return report;
    }
    match fonc_check(&problem.set, problem.objective.as_ref(), &problem.point) {
        Ok(f) => report.fonc = Some(f),
        Err(e) => diagnostics.push(format!("fonc: {e}")),
    }
    let mut dirs = Vec::new();
    if report.fonc.as_ref().is_some_and(|f| f.holds()) {
        let ndc = ndc_check(problem, None);
        match scan_directions(problem, cfg).and_then(|d| {
            let records = curvature_scan(problem, &d, cfg)?;
            Ok((d, records))
        }) {
            Ok((d, records)) => {
                report.ssc = ssc_from_records(&records, ndc.established());
                report.curvature = records;
                dirs = d;
            }
            Err(e) => {
                diagnostics.push(format!("curvature scan: {e}"));
                report.ssc = inconclusive(format!("curvature scan failed: {e}"));
            }
        }
        report.ndc = Some(ndc);
    } else {
        report.ssc = inconclusive("first-order condition does not hold".into());
    }
    if !cfg.skip_growth {
        match growth_sample(&problem.set, problem.objective.as_ref(), &problem.point, &problem.norm, &dirs, &cfg.growth) {
            Ok(g) => report.growth = Some(g),
            Err(e) => diagnostics.push(format!("growth: {e}")),
        }
    }
    let c = report.growth.as_ref().map(|g| g.fitted_c).filter(|c| c.is_finite()).unwrap_or(0.0).max(0.0);
    match snc_residuals(&report.curvature, c, &problem.norm) {
        Ok(s) => report.snc = s,
        Err(e) => diagnostics.push(format!("snc: {e}")),
    }
    report.verdict = render_verdict(report.fonc.as_ref(), report.ndc.as_ref(), &report.snc, &report.ssc, report.growth.as_ref());
    report.diagnostics = diagnostics;
    report
}
