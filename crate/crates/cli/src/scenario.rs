//! Scenario files: JSON with a `"schema": 1` field, loaded into plain
//! serde structs and converted into core types on demand.

use std::fmt;
use std::path::Path;

use fracctrl_core::bolza::{AdmissibleSet, BolzaCost, GrowthConstants, OptimizeConfig};
use fracctrl_core::grammian::{SweepParams, Waypoints};
use fracctrl_core::system::{ControlLaw, DeclaredConstants, SegmentControl, SystemSpec};
use fracctrl_core::SolverConfig;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{
    self, ForcingTerm, ImpulseEntry, KernelEntry, NonlocalEntry, RunningEntry, TerminalEntry, FORCING_KINDS,
    IMPULSE_KINDS, KERNEL_KINDS, NONLOCAL_KINDS, RUNNING_KINDS, TERMINAL_KINDS,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub system: SystemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<ControlsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible: Option<BoxSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub q: f64,
    pub horizon: f64,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub impulse_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub impulse_maps: Vec<ImpulseEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forcing: Vec<ForcingTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlocal: Option<NonlocalEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared: Option<DeclaredSection>,
}

/// Asserted hypothesis constants. Missing `beta` and `d` are derived from
/// the catalog entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e: Vec<f64>,
    #[serde(default)]
    pub mu_bounds: [f64; 3],
    #[serde(default)]
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub nodes: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub damping: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let cfg = SolverConfig::<f64>::default();
        Self {
            nodes: cfg.nodes_per_segment,
            picard_tol: cfg.picard_tol,
            picard_max_iter: cfg.picard_max_iter,
            damping: cfg.damping,
            delta0: cfg.delta0,
        }
    }
}

/// Constant `u` per segment and `v` per impulse, for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsSection {
    pub u: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lambda0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        let p = SweepParams::<f64>::default();
        Self { lambda0: p.lambda0, ratio: p.ratio, count: p.count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub terminal: TerminalEntry,
    pub running: RunningEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    pub phi_min: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub intervals: usize,
    pub max_iter: usize,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        let c = OptimizeConfig::<f64>::default();
        Self { intervals: c.intervals_per_segment, max_iter: c.max_iter }
    }
}

/// Which check a validation issue came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    Catalog,
    Dimension,
    Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{} validation error(s):\n  {}", .0.len(), .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<Issue>),
}

impl ScenarioError {
    pub fn issues(&self) -> &[Issue] {
        match self {
            Self::Invalid(v) => v,
            _ => &[],
        }
    }
}

fn parse_error(e: serde_json::Error) -> ScenarioError {
    ScenarioError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

/// `kind` fields naming nothing in the catalog, located by JSON path.
fn unknown_kinds(root: &Value) -> Vec<Issue> {
    let mut out = Vec::new();
    let mut check = |path: String, v: &Value, known: &[&str], what: &str| {
        let Some(kind) = v.get("kind") else { return };
        match kind.as_str() {
            Some(k) if known.contains(&k) => {}
            _ => out.push(Issue {
                kind: IssueKind::Catalog,
                path,
                message: format!("unknown {what} {kind} (known: {})", known.join(", ")),
            }),
        }
    };
    let system = &root["system"];
    if let Some(items) = system["forcing"].as_array() {
        for (i, v) in items.iter().enumerate() {
            check(format!("system.forcing[{i}]"), v, FORCING_KINDS, "forcing");
        }
    }
    if let Some(items) = system["impulse_maps"].as_array() {
        for (i, v) in items.iter().enumerate() {
            check(format!("system.impulse_maps[{i}]"), v, IMPULSE_KINDS, "impulse map");
        }
    }
    check("system.kernel".into(), &system["kernel"], KERNEL_KINDS, "kernel");
    check("system.nonlocal".into(), &system["nonlocal"], NONLOCAL_KINDS, "non-local map");
    check("cost.terminal".into(), &root["cost"]["terminal"], TERMINAL_KINDS, "terminal cost");
    check("cost.running".into(), &root["cost"]["running"], RUNNING_KINDS, "running cost");
    out
}

/// Parses and validates scenario text, reporting every validation issue.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(parse_error)?;
    let catalog = unknown_kinds(&value);
    if !catalog.is_empty() {
        return Err(ScenarioError::Invalid(catalog));
    }
    let scenario: Scenario = serde_json::from_str(text).map_err(parse_error)?;
    let issues = scenario.issues();
    if issues.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(issues))
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

impl Scenario {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn n(&self) -> usize {
        self.system.x0.len()
    }

    pub fn p(&self) -> usize {
        self.system.b.first().map_or(0, Vec::len)
    }

    pub fn m(&self) -> usize {
        self.system.impulse_times.len()
    }

    /// Every validation problem, in a fixed order.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut push = |kind, path: &str, message: String| {
            out.push(Issue { kind, path: path.into(), message })
        };
        if self.schema != SCHEMA_VERSION {
            push(IssueKind::Value, "schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema));
        }
        let sys = &self.system;
        let (n, p, m) = (self.n(), self.p(), self.m());
        for (name, rows) in [("system.a", &sys.a), ("system.b", &sys.b), ("system.d", &sys.d)] {
            if catalog::matrix(rows).is_none() {
                push(IssueKind::Dimension, name, "rows have different lengths".into());
            }
        }
        let ragged = [&sys.a, &sys.b, &sys.d].iter().any(|r| catalog::matrix(r).is_none());
        if !ragged {
            for e in self.raw_spec().validation_errors() {
                let kind = match e {
                    fracctrl_core::Error::Dimension(_) => IssueKind::Dimension,
                    _ => IssueKind::Value,
                };
                let path = match e {
                    fracctrl_core::Error::Order(_) => "system.q",
                    fracctrl_core::Error::Schedule(_) => "system.impulse_times",
                    _ => "system",
                };
                let message = match e {
                    fracctrl_core::Error::Order(q) => format!("q must lie in (0,1], got {q}"),
                    other => other.to_string(),
                };
                push(kind, path, message);
            }
        }
        for (i, t) in sys.forcing.iter().enumerate() {
            for msg in t.problems(n) {
                push(IssueKind::Dimension, &format!("system.forcing[{i}]"), msg);
            }
        }
        for (i, t) in sys.impulse_maps.iter().enumerate() {
            for msg in t.problems(n) {
                push(IssueKind::Dimension, &format!("system.impulse_maps[{i}]"), msg);
            }
        }
        if let Some(g) = &sys.nonlocal {
            for msg in g.problems(sys.horizon) {
                push(IssueKind::Value, "system.nonlocal", msg);
            }
        }
        if let Err(e) = self.solver_config().validate() {
            push(IssueKind::Value, "solver", e.to_string());
        }
        if let Some(c) = &self.controls {
            if c.u.len() != m + 1 {
                push(IssueKind::Dimension, "controls.u", format!("{} entries for {} segments", c.u.len(), m + 1));
            }
            if c.v.len() != m && !(c.v.is_empty()) {
                push(IssueKind::Dimension, "controls.v", format!("{} entries for {m} impulses", c.v.len()));
            }
            if c.u.iter().chain(&c.v).any(|u| u.len() != p) {
                push(IssueKind::Dimension, "controls", format!("every control must have {p} components"));
            }
        }
        if let Some(w) = &self.waypoints {
            if w.len() != m + 1 {
                push(IssueKind::Dimension, "waypoints", format!("{} waypoints for {} segments", w.len(), m + 1));
            }
            if w.iter().any(|x| x.len() != n) {
                push(IssueKind::Dimension, "waypoints", format!("every waypoint must have {n} components"));
            }
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                push(IssueKind::Value, "lambda", format!("lambda must be positive, got {l}"));
            }
        }
        if let Some(s) = &self.sweep {
            if !(s.lambda0 > 0.0) || !(s.ratio > 0.0 && s.ratio < 1.0) || s.count < 2 {
                push(IssueKind::Value, "sweep", "need lambda0 > 0, ratio in (0, 1) and count >= 2".into());
            }
        }
        if let Some(c) = &self.cost {
            if let TerminalEntry::Quadratic { target, weight } = &c.terminal {
                if target.len() != n {
                    push(IssueKind::Dimension, "cost.terminal.target", format!("length {}, expected {n}", target.len()));
                }
                if *weight < 0.0 {
                    push(IssueKind::Value, "cost.terminal.weight", "terminal cost must be non-negative".into());
                }
            }
            if let Some(g) = &c.growth {
                if [g.phi_min, g.c1, g.c2, g.c3].iter().any(|v| *v < 0.0) || g.p < 1.0 {
                    push(IssueKind::Value, "cost.growth", "constants must be non-negative and p >= 1".into());
                }
            }
        }
        if let Some(b) = &self.admissible {
            if b.lower.len() != p || b.upper.len() != p {
                push(IssueKind::Dimension, "admissible", format!("bounds must have {p} components"));
            } else if let Err(e) = self.admissible_set().expect("present") {
                push(IssueKind::Value, "admissible", e.to_string());
            }
        }
        if let Some(o) = &self.optimize {
            if o.intervals == 0 || o.intervals > self.solver.nodes {
                push(IssueKind::Value, "optimize.intervals", format!("must lie in 1..={}", self.solver.nodes));
            }
        }
        out
    }

    fn raw_spec(&self) -> SystemSpec<f64> {
        let sys = &self.system;
        let mat = |rows: &[Vec<f64>]| catalog::matrix(rows).unwrap_or_else(|| DMatrix::zeros(0, 0));
        SystemSpec::linear(
            sys.q,
            mat(&sys.a),
            mat(&sys.b),
            mat(&sys.d),
            DVector::from_column_slice(&sys.x0),
            sys.horizon,
        )
        .with_impulses(sys.impulse_times.clone(), sys.impulse_maps.iter().map(ImpulseEntry::build_checked).collect())
    }

    /// Core system with every catalog entry instantiated. Call on a
    /// validated scenario.
    pub fn spec(&self) -> SystemSpec<f64> {
        let sys = &self.system;
        let mut spec = self.raw_spec();
        spec.forcing = catalog::forcing(&sys.forcing);
        spec.kernel = sys.kernel.as_ref().map(KernelEntry::build);
        spec.nonlocal = sys.nonlocal.as_ref().map(NonlocalEntry::build);
        spec.declared = self.declared();
        spec
    }

    pub fn declared(&self) -> DeclaredConstants<f64> {
        let sys = &self.system;
        let given = sys.declared.clone().unwrap_or_default();
        DeclaredConstants {
            beta: given.beta.unwrap_or_else(|| sys.nonlocal.as_ref().map_or(0.0, NonlocalEntry::lipschitz)),
            d: given.d.unwrap_or_else(|| sys.impulse_maps.iter().map(ImpulseEntry::lipschitz).collect()),
            e: given.e,
            mu_bounds: given.mu_bounds,
            alpha1: given.alpha1,
            alpha2: given.alpha2,
            kernel_bound: sys.kernel.as_ref().map(KernelEntry::bound),
        }
    }

    pub fn solver_config(&self) -> SolverConfig<f64> {
        let s = &self.solver;
        SolverConfig {
            nodes_per_segment: s.nodes,
            picard_tol: s.picard_tol,
            picard_max_iter: s.picard_max_iter,
            damping: s.damping,
            delta0: s.delta0,
            caputo_check: false,
        }
    }

    pub fn control_law(&self) -> ControlLaw<f64> {
        let (m, p) = (self.m(), self.p());
        match &self.controls {
            None => ControlLaw {
                u_segments: vec![SegmentControl::Constant(DVector::zeros(p)); m + 1],
                v_impulses: vec![DVector::zeros(p); m],
            },
            Some(c) => ControlLaw {
                u_segments: c.u.iter().map(|u| SegmentControl::Constant(DVector::from_column_slice(u))).collect(),
                v_impulses: if c.v.is_empty() {
                    vec![DVector::zeros(p); m]
                } else {
                    c.v.iter().map(|v| DVector::from_column_slice(v)).collect()
                },
            },
        }
    }

    pub fn waypoints(&self) -> Option<Waypoints<f64>> {
        self.waypoints
            .as_ref()
            .map(|w| Waypoints::new(w.iter().map(|x| DVector::from_column_slice(x)).collect()))
    }

    pub fn sweep_params(&self) -> SweepParams<f64> {
        let s = self.sweep.clone().unwrap_or_default();
        SweepParams { lambda0: s.lambda0, ratio: s.ratio, count: s.count }
    }

    pub fn cost(&self) -> Option<BolzaCost<f64>> {
        self.cost.as_ref().map(|c| BolzaCost {
            terminal: c.terminal.build(),
            running: c.running.build(),
            growth: c.growth.as_ref().map(|g| GrowthConstants {
                phi_min: g.phi_min,
                c1: g.c1,
                c2: g.c2,
                c3: g.c3,
                p: g.p,
            }),
        })
    }

    pub fn admissible_set(&self) -> Option<fracctrl_core::Result<AdmissibleSet<f64>>> {
        self.admissible
            .as_ref()
            .map(|b| AdmissibleSet::new(DVector::from_column_slice(&b.lower), DVector::from_column_slice(&b.upper)))
    }

    pub fn optimize_config(&self) -> OptimizeConfig<f64> {
        let o = self.optimize.clone().unwrap_or_default();
        OptimizeConfig { intervals_per_segment: o.intervals, max_iter: o.max_iter, ..OptimizeConfig::default() }
    }
}

impl ImpulseEntry {
    /// Builds the map, or the zero map when the parameters are malformed so
    /// that validation can still run the core checks.
    fn build_checked(&self) -> fracctrl_core::system::ImpulseMap<f64> {
        match self {
            Self::Affine { a, d } if catalog::matrix(a).map(|m| m.shape()) != Some((d.len(), d.len())) => {
                std::sync::Arc::new(|x: &DVector<f64>| x * 0.0)
            }
            _ => self.build(),
        }
    }
}
