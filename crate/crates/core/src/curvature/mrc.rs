use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{curvature_brute_force, curvature_closed_form, CurvatureConfig, CurvatureKind};
use crate::bangbang::{extract_zero_set, surface_curvature, AdjointField, GRAD_FLOOR};
use crate::error::Result;
use crate::model::AdmissibleSet;

/// A direction for the regularity probe: an ordinary vector, or (for bang-bang sets) a
/// surface density g on the zero level set of φ.
#[derive(Clone)]
pub enum ProbeDirection {
    Vector(Vec<f64>),
    Surface(Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>),
}

impl fmt::Debug for ProbeDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeDirection::Vector(v) => f.debug_tuple("Vector").field(v).finish(),
            ProbeDirection::Surface(_) => f.write_str("Surface(..)"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MrcEntry {
    pub index: usize,
    /// Estimate with the default correction radius.
    pub bounded: CurvatureKind,
    /// Estimate with the radius relaxed tenfold (surface directions: weak-⋆ limit).
    pub relaxed: CurvatureKind,
    pub agree: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MrcReport {
    pub entries: Vec<MrcEntry>,
    /// Indices of directions where the two regimes disagree.
    pub suspect: Vec<usize>,
    /// Always true: a sampling probe, not a proof.
    pub advisory: bool,
}

fn agree(a: CurvatureKind, b: CurvatureKind) -> bool {
    match (a, b) {
        (CurvatureKind::Finite(x), CurvatureKind::Finite(y)) => (x - y).abs() <= 1e-2 * (1.0 + x.abs().max(y.abs())),
        (x, y) => x == y && x != CurvatureKind::Unresolved,
    }
}

/// Compares curvature estimates under bounded and relaxed correction regimes and flags
/// directions where they disagree.
pub fn mrc_probe(
    set: &AdmissibleSet,
    x: &[f64],
    phi: &[f64],
    dirs: &[ProbeDirection],
    cfg: &CurvatureConfig,
) -> Result<MrcReport> {
    let relaxed_cfg = CurvatureConfig { radius_factor: 10.0 * cfg.radius_factor, ..cfg.clone() };
    let mut entries = Vec::with_capacity(dirs.len());
    for (index, dir) in dirs.iter().enumerate() {
        let entry = match (dir, set) {
            (ProbeDirection::Vector(h), _) if set.is_polyhedral() => {
                let v = curvature_closed_form(set, x, phi, h)?.value;
                MrcEntry { index, bounded: v, relaxed: v, agree: true, note: "polyhedric closed form".into() }
            }
            (ProbeDirection::Vector(h), _) => {
                let a = curvature_brute_force(set, x, phi, h, cfg)?.value;
                let b = curvature_brute_force(set, x, phi, h, &relaxed_cfg)?.value;
                MrcEntry { index, bounded: a, relaxed: b, agree: agree(a, b), note: String::new() }
            }
            (ProbeDirection::Surface(g), AdmissibleSet::BangBangBox { grid }) => {
                let field = AdjointField::from_values(grid.clone(), phi.to_vec())?;
                let sm = extract_zero_set(&field, GRAD_FLOOR)?.with_density(g.as_ref());
                let weak = surface_curvature(&sm)?;
                let mass = sm.total_variation()?;
                if mass == 0.0 {
                    MrcEntry {
                        index,
                        bounded: CurvatureKind::Finite(0.0),
                        relaxed: CurvatureKind::Finite(0.0),
                        agree: true,
                        note: "zero density".into(),
                    }
                } else {
                    MrcEntry {
                        index,
                        bounded: CurvatureKind::PlusInfinity,
                        relaxed: CurvatureKind::Finite(weak),
                        agree: false,
                        note: format!(
                            "corrections of a singular direction satisfy ‖t r‖ ≥ {:.3e} in L¹ and cannot converge strongly",
                            2.0 * mass
                        ),
                    }
                }
            }
            (ProbeDirection::Surface(_), _) => {
                return Err(crate::error::structural("surface directions need a bang-bang set"));
            }
        };
        entries.push(entry);
    }
    let suspect = entries.iter().filter(|e| !e.agree).map(|e| e.index).collect();
    Ok(MrcReport { entries, suspect, advisory: true })
}
