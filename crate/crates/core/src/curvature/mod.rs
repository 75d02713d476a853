//! The directional curvature functional Q_C^{x,φ}(h): brute-force estimation over
//! second-order correction sequences, closed forms, the pullback formula for level
//! sets, and a regularity probe comparing bounded and relaxed correction radii.

mod brute_force;
mod closed_form;
mod mrc;

use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

pub use brute_force::{classify_trail, curvature_brute_force};
pub use closed_form::{curvature_closed_form, curvature_pullback};
pub use mrc::{mrc_probe, MrcEntry, MrcReport, ProbeDirection};

/// Extended-real value of the curvature functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureKind {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
    Unresolved,
}

impl CurvatureKind {
    pub fn label(&self) -> String {
        match self {
            CurvatureKind::Finite(v) => format!("{v}"),
            CurvatureKind::PlusInfinity => "+infinity".into(),
            CurvatureKind::MinusInfinity => "-infinity".into(),
            CurvatureKind::Unresolved => "unresolved".into(),
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            CurvatureKind::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Sum with a finite number; infinities absorb it.
    pub fn plus(&self, c: f64) -> CurvatureKind {
        match self {
            CurvatureKind::Finite(v) => CurvatureKind::Finite(v + c),
            k => *k,
        }
    }

    /// Scalar multiple with α ≥ 0 (0·∞ is taken as ∞ since it only arises for h = 0
    /// limits, which never reach this code path with an infinite value).
    pub fn scaled(&self, alpha: f64) -> CurvatureKind {
        match self {
            CurvatureKind::Finite(v) => CurvatureKind::Finite(alpha * v),
            k => *k,
        }
    }
}

impl Serialize for CurvatureKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CurvatureKind::Finite(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureMethod {
    BruteForce,
    PolyhedricClosedForm,
    SotClosedForm,
    Pullback,
    BangbangSurface,
}

/// One step of the brute-force schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrailEntry {
    pub t: f64,
    /// Best ⟨φ, r⟩ found; `None` when no feasible correction was found within the radius.
    pub best: Option<f64>,
    /// Remaining infeasibility of the best correction, in units of r.
    pub feasibility_residual: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureValue {
    pub value: CurvatureKind,
    pub method: CurvatureMethod,
    /// Brute-force finite values are upper bounds of the infimum, never certified.
    pub upper_bound_only: bool,
    pub diagnostics: Vec<TrailEntry>,
}

impl CurvatureValue {
    pub(crate) fn exact(value: CurvatureKind, method: CurvatureMethod) -> Self {
        Self { value, method, upper_bound_only: false, diagnostics: Vec::new() }
    }
}

/// Settings of the brute-force estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurvatureConfig {
    pub t0: f64,
    pub k_max: usize,
    /// Correction radius at t0 in units of max(‖h‖, ‖h‖²).
    pub radius_factor: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Relative tolerance for declaring the trail converged.
    pub rel_tol: f64,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        Self { t0: 0.1, k_max: 20, radius_factor: 100.0, restarts: 16, seed: 0, rel_tol: 1e-3 }
    }
}
