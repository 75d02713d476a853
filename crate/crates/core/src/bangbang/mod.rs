//! Bang-bang controls x̄ = −sign φ̄ on grids: zero level sets of the adjoint with their
//! surface measures, the level-set constant K(φ̄), recovery strips realizing surface
//! directions, the L¹ Taylor expansion, and the explicit no-gap check.

mod estimate;
mod field;
mod level_set;
mod no_gap;
mod strips;
mod taylor;
mod zero_set;

pub use estimate::{fundamental_estimate_check, EstimateOutcome, ESTIMATE_TOL};
pub use field::{AdjointField, GradientFn, ScalarFn};
pub use level_set::{level_set_constant, LevelSetConstant};
pub use no_gap::{
    bangbang_no_gap, strip_growth_sample, BangBangConfig, BangBangDetails, BangBangProblem, GridObjective, Kernel,
    StripGrowth,
};
pub use strips::{recovery_strip_sequence, verify_recovery_limits, RecoveryLimitsReport, RecoveryRow, RecoveryStrips, StripPiece};
pub use taylor::{l1_taylor_check, TaylorReport, TaylorRow};
pub use zero_set::{extract_zero_set, surface_curvature, SurfaceMeasure, GRAD_FLOOR};
