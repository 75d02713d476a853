//! Full no-gap report for the discretized control-constrained problem, printed as JSON.

use curvlab::problems::ControlProblem;
use curvlab::soc::{no_gap_report, SocConfig};

fn main() -> curvlab::Result<()> {
    let control = ControlProblem::new(20, 0.1);
    let problem = control.problem()?;
    let active = problem.point.iter().filter(|u| u.abs() == 1.0).count();
    println!("optimal control: {active} of {} cells at a bound", problem.point.len());
    let report = no_gap_report(&problem, &SocConfig::default());
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({
        "fonc": report.fonc,
        "ndc": report.ndc,
        "ssc": report.ssc,
        "fitted_c": report.growth.as_ref().map(|g| g.fitted_c),
        "verdict": report.verdict,
    })).expect("serializable"));
    Ok(())
}
