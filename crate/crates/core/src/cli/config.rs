use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bangbang::{AdjointField, BangBangConfig, BangBangProblem, GRAD_FLOOR};
use crate::curvature::CurvatureConfig;
use crate::error::{Error, Result};
use crate::expr::{Env, Expr, ExprConstraintMap, ExprObjective, Var};
use crate::model::{AdmissibleSet, ConvexSet, Grid, LevelSet, Side};
use crate::problems::ControlProblem;
use crate::soc::{CurvatureStrategy, GrowthConfig, Problem, SncHypothesis, SocConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Fonc,
    Curvature,
    Snc,
    Ssc,
    Growth,
    Bangbang,
    #[default]
    Full,
}

/// Resolved run configuration. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    /// Drives every random stream of the run; copied into `curvature.seed` and
    /// `growth.seed` on resolution.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub analysis: Analysis,
    pub problem: ProblemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub curvature: CurvatureConfig,
    #[serde(default)]
    pub growth: GrowthConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub bangbang: BangBangOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// min J(x) over a set given inline; `objective` is an expression in x1..xn.
    Finite { set: SetConfig, objective: String, point: Vec<f64> },
    /// Discretized control-constrained tracking problem, solved to optimality.
    Control { cells: usize, gamma: f64 },
    /// Bang-bang problem with adjoint φ̄(xi1, xi2) and optional kernel k(xi, eta) of J″.
    BangBang {
        adjoint: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kernel: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Polyhedron { a: Vec<Vec<f64>>, b: Vec<f64> },
    PowerEpigraph { alpha: f64, side: Side },
    UnitBall { dim: usize },
    LevelSet {
        constraints: Vec<String>,
        cone: ConeConfig,
        #[serde(default)]
        zkcq: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeConfig {
    NonPositive,
    UnitBall { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Polyhedral { a: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub directions: usize,
    pub extra_directions: Vec<Vec<f64>>,
    pub strategy: CurvatureStrategy,
    pub snc_hypothesis: SncHypothesis,
    /// Growth constant for `analysis = "snc"`.
    pub snc_c: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let d = SocConfig::default();
        Self {
            directions: d.directions,
            extra_directions: Vec::new(),
            strategy: d.strategy,
            snc_hypothesis: d.snc_hypothesis,
            snc_c: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BangBangOptions {
    pub s_max: f64,
    pub levels: usize,
    pub grad_floor: f64,
    /// Surface densities g(xi1, xi2) for the second-order check.
    pub densities: Vec<String>,
}

impl Default for BangBangOptions {
    fn default() -> Self {
        Self { s_max: 0.1, levels: 6, grad_floor: GRAD_FLOOR, densities: vec!["1".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "curvlab-out".into() }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Sets `path` (dot-separated) in a JSON object tree; the value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(format!("override `{assignment}` has an empty key")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| config_err(format!("override `{path}`: `{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            map.insert((*key).to_string(), value);
            return Ok(());
        }
        node = map.entry(*key).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("non-empty key list")
}

impl RunConfig {
    /// Parses a config text (errors carry line and column), applies overrides, and
    /// resolves derived fields.
    pub fn load(text: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(config_err)?;
        if !overrides.is_empty() {
            let mut v = serde_json::to_value(&cfg).map_err(config_err)?;
            for o in overrides {
                apply_override(&mut v, o)?;
            }
            cfg = serde_json::from_value(v).map_err(|e| config_err(format!("after overrides: {e}")))?;
        }
        cfg.resolve()?;
        Ok(cfg)
    }

    fn resolve(&mut self) -> Result<()> {
        self.curvature.seed = self.seed;
        self.growth.seed = self.seed;
        let is_bb = matches!(self.problem, ProblemConfig::BangBang { .. });
        if is_bb && !matches!(self.analysis, Analysis::Full | Analysis::Bangbang) {
            return Err(config_err("bang-bang problems support analysis \"full\" or \"bangbang\" only"));
        }
        if !is_bb && self.analysis == Analysis::Bangbang {
            return Err(config_err("analysis \"bangbang\" needs a bang_bang problem"));
        }
        if is_bb && self.grid.is_none() {
            return Err(config_err("bang_bang problems need a `grid` section"));
        }
        if !(self.scan.snc_c >= 0.0) {
            return Err(config_err("scan.snc_c must be nonnegative"));
        }
        Ok(())
    }

    pub fn soc_config(&self) -> SocConfig {
        SocConfig {
            directions: self.scan.directions,
            extra_directions: self.scan.extra_directions.clone(),
            strategy: self.scan.strategy.clone(),
            curvature: self.curvature.clone(),
            growth: self.growth.clone(),
            skip_growth: false,
            snc_hypothesis: self.scan.snc_hypothesis,
        }
    }

    pub fn bangbang_config(&self) -> BangBangConfig {
        BangBangConfig {
            s_max: self.bangbang.s_max,
            levels: self.bangbang.levels,
            grad_floor: self.bangbang.grad_floor,
            growth: self.growth.clone(),
            snc_hypothesis: self.scan.snc_hypothesis,
        }
    }
}

/// A problem built from a configuration.
pub enum BuiltProblem {
    Finite(Problem),
    BangBang { problem: BangBangProblem, densities: Vec<Expr> },
}

fn convex_from(cone: &ConeConfig) -> ConvexSet {
    match cone {
        ConeConfig::NonPositive => ConvexSet::NonPositive,
        ConeConfig::UnitBall { dim } => ConvexSet::UnitBall { dim: *dim },
        ConeConfig::Box { lower, upper } => ConvexSet::Box { lower: lower.clone(), upper: upper.clone() },
        ConeConfig::Polyhedral { a, b } => ConvexSet::Polyhedral { a: a.clone(), b: b.clone() },
    }
}

fn build_set(set: &SetConfig, n: usize) -> Result<AdmissibleSet> {
    Ok(match set {
        SetConfig::Box { lower, upper } => AdmissibleSet::boxed(lower.clone(), upper.clone())?,
        SetConfig::Polyhedron { a, b } => AdmissibleSet::polyhedron(a.clone(), b.clone())?,
        SetConfig::PowerEpigraph { alpha, side } => AdmissibleSet::power_epigraph(*alpha, *side)?,
        SetConfig::UnitBall { dim } => {
            let k = ConvexSet::UnitBall { dim: *dim };
            k.validate()?;
            AdmissibleSet::Convex(k)
        }
        SetConfig::LevelSet { constraints, cone, zkcq } => {
            let map = ExprConstraintMap::new(n, constraints)?;
            AdmissibleSet::LevelSet(LevelSet::new(Arc::new(map), convex_from(cone), *zkcq)?)
        }
    })
}

fn build_grid(g: &GridConfig) -> Result<Grid> {
    match (g.lower.as_slice(), g.upper.as_slice()) {
        ([a], [b]) => Grid::interval(*a, *b, g.cells),
        ([a0, a1], [b0, b1]) => Grid::rectangle([*a0, *a1], [*b0, *b1], g.cells),
        _ => Err(config_err("grid bounds must both have length 1 or 2")),
    }
}

fn field_expr(src: &str, dim: usize, with_eta: bool, what: &str) -> Result<Expr> {
    let e = Expr::parse(src)?;
    e.check_variables(
        |v| match v {
            Var::Xi(k) => k < dim,
            Var::Eta(k) => with_eta && k < dim,
            Var::X(_) => false,
        },
        what,
    )?;
    Ok(e)
}

impl RunConfig {
    pub fn build(&self) -> Result<BuiltProblem> {
        match &self.problem {
            ProblemConfig::Finite { set, objective, point } => {
                let n = point.len();
                let set = build_set(set, n)?;
                let obj = ExprObjective::new(n, objective)?;
                Ok(BuiltProblem::Finite(Problem::new(set, Arc::new(obj), point.clone())?))
            }
            ProblemConfig::Control { cells, gamma } => {
                if *cells == 0 || !(*gamma > 0.0) {
                    return Err(config_err("control problem needs cells > 0 and gamma > 0"));
                }
                Ok(BuiltProblem::Finite(ControlProblem::new(*cells, *gamma).problem()?))
            }
            ProblemConfig::BangBang { adjoint, kernel } => {
                let grid = build_grid(self.grid.as_ref().expect("checked on resolution"))?;
                let dim = grid.dim();
                let phi = field_expr(adjoint, dim, false, "adjoint")?;
                let grads: Vec<Expr> = (0..2).map(|k| if k < dim { phi.diff(Var::Xi(k)) } else { Expr::Num(0.0) }).collect();
                let value = phi.clone();
                let field = AdjointField::analytic(
                    grid,
                    move |p| value.eval(&Env::xi(p)),
                    move |p| {
                        let env = Env::xi(p);
                        [grads[0].eval(&env), grads[1].eval(&env)]
                    },
                )?;
                let problem = match kernel {
                    None => BangBangProblem::linear(field),
                    Some(src) => {
                        let k = field_expr(src, dim, true, "kernel")?;
                        BangBangProblem::with_kernel(field, move |s, t| k.eval(&Env { x: &[], xi: s, eta: t }))
                    }
                };
                let densities = self
                    .bangbang
                    .densities
                    .iter()
                    .map(|s| field_expr(s, dim, false, "density"))
                    .collect::<Result<_>>()?;
                Ok(BuiltProblem::BangBang { problem, densities })
            }
        }
    }
}
