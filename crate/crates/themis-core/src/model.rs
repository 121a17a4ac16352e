//! Region model document: domains, parameters, series, actors, scenario template.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::bbn::{self, RootMapping, ScenarioNetwork};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_HORIZON: u32 = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDefinition {
    pub id: String,
    pub domain: String,
    #[serde(default)]
    pub units: String,
    #[serde(default)]
    pub display_name: String,
    /// Physical bounds used to truncate sampled projections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

/// One `(year, value)` pair; serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub i32, pub f64);

impl Observation {
    pub fn year(&self) -> i32 {
        self.0
    }
    pub fn value(&self) -> f64 {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSeries {
    pub parameter_id: String,
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    pub variables: Vec<String>,
    pub related: Vec<Vec<bool>>,
}

impl AdjacencyMatrix {
    /// Every pair related.
    pub fn complete(variables: Vec<String>) -> Self {
        let n = variables.len();
        Self { variables, related: alloc::vec![alloc::vec![true; n]; n] }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == id)
    }

    pub fn is_related(&self, a: &str, b: &str) -> Option<bool> {
        Some(self.related[self.index_of(a)?][self.index_of(b)?])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum ActorType {
    A,
    B,
    C,
    Other(String),
}

impl From<String> for ActorType {
    fn from(s: String) -> Self {
        match s.as_str() {
            "A" => Self::A,
            "B" => Self::B,
            "C" => Self::C,
            _ => Self::Other(s),
        }
    }
}

impl From<ActorType> for String {
    fn from(t: ActorType) -> Self {
        match t {
            ActorType::A => "A".into(),
            ActorType::B => "B".into(),
            ActorType::C => "C".into(),
            ActorType::Other(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalize {
    Under,
    Over,
    Both,
}

impl Penalize {
    pub fn under(self) -> bool {
        matches!(self, Self::Under | Self::Both)
    }
    pub fn over(self) -> bool {
        matches!(self, Self::Over | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub expression_coefficients: BTreeMap<String, f64>,
    pub target: f64,
    pub weight: f64,
    pub penalize: Penalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Self::Le => lhs <= rhs + tol,
            Self::Eq => (lhs - rhs).abs() <= tol,
            Self::Ge => lhs + tol >= rhs,
        }
    }
}

/// Constraint right-hand side: a literal, or `scale ×` the projected mean of a
/// parameter at the horizon year being solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rhs {
    Value(f64),
    Projected {
        projected: String,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[allow(clippy::trivially_copy_pass_by_ref)]
fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coefficients: BTreeMap<String, f64>,
    pub relation: Relation,
    pub rhs: Rhs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSpec {
    pub id: String,
    pub actor_type: ActorType,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub objective_coefficients: BTreeMap<String, f64>,
    pub goals: Vec<Goal>,
    #[serde(default)]
    pub constraints: Vec<LinearConstraint>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl ActorSpec {
    /// Parameter ids in goals, constraints and objective, first-appearance order.
    pub fn referenced_parameters(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |id: &String| {
            if seen.insert(id.clone()) {
                out.push(id.clone());
            }
        };
        for g in &self.goals {
            g.expression_coefficients.keys().for_each(&mut push);
        }
        for c in &self.constraints {
            c.coefficients.keys().for_each(&mut push);
        }
        self.objective_coefficients.keys().for_each(&mut push);
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum TheoryId {
    #[default]
    TrendBaseline,
    BernsteinFourFactor,
    User(String),
}

impl From<String> for TheoryId {
    fn from(s: String) -> Self {
        match s.as_str() {
            "trend_baseline" => Self::TrendBaseline,
            "bernstein_four_factor" => Self::BernsteinFourFactor,
            _ => Self::User(s),
        }
    }
}

impl From<TheoryId> for String {
    fn from(t: TheoryId) -> Self {
        match t {
            TheoryId::TrendBaseline => "trend_baseline".into(),
            TheoryId::BernsteinFourFactor => "bernstein_four_factor".into(),
            TheoryId::User(s) => s,
        }
    }
}

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from(self.clone()))
    }
}

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

fn default_horizon() -> u32 {
    DEFAULT_HORIZON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionModel {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub region_name: String,
    #[serde(default = "default_horizon")]
    pub horizon_years: u32,
    #[serde(default)]
    pub theory: TheoryId,
    pub parameters: Vec<ParameterDefinition>,
    #[serde(default)]
    pub series: Vec<ParameterSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<AdjacencyMatrix>,
    pub actors: Vec<ActorSpec>,
    pub scenario_template: ScenarioNetwork,
    /// Further weighted scenarios aggregated with the template.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub additional_scenarios: Vec<ScenarioNetwork>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl RegionModel {
    pub fn parameter(&self, id: &str) -> Option<&ParameterDefinition> {
        self.parameters.iter().find(|p| p.id == id)
    }

    pub fn series_for(&self, id: &str) -> Option<&ParameterSeries> {
        self.series.iter().find(|s| s.parameter_id == id)
    }

    pub fn domains(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.parameters {
            if !out.contains(&p.domain) {
                out.push(p.domain.clone());
            }
        }
        out
    }

    pub fn scenarios(&self) -> impl Iterator<Item = &ScenarioNetwork> {
        core::iter::once(&self.scenario_template).chain(self.additional_scenarios.iter())
    }

    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut v = Validator::default();
        v.model(self);
        if v.issues.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(v.issues))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    /// Dotted path into the model document, e.g. `actors[0].goals[1].target`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<ValidationIssue>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationErrors {}

#[derive(Default)]
struct Validator {
    issues: Vec<ValidationIssue>,
    params: BTreeSet<String>,
    actors: BTreeSet<String>,
}

impl Validator {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue { path: path.into(), message: message.into() });
    }

    fn param_ref(&mut self, path: String, id: &str) {
        if !self.params.contains(id) {
            self.err(path, format!("unknown parameter '{id}'"));
        }
    }

    fn model(&mut self, m: &RegionModel) {
        if m.format_version != FORMAT_VERSION {
            self.err(
                "format_version",
                format!("unsupported format_version {} (expected {FORMAT_VERSION})", m.format_version),
            );
        }
        if m.region_name.trim().is_empty() {
            self.err("region_name", "region_name must be non-empty");
        }
        if m.horizon_years == 0 {
            self.err("horizon_years", "horizon_years must be at least 1");
        }
        self.parameters(m);
        self.series(m);
        if let Some(adj) = &m.adjacency {
            self.adjacency(adj);
        }
        self.actors(m);
        self.scenario("scenario_template", &m.scenario_template);
        for (i, s) in m.additional_scenarios.iter().enumerate() {
            self.scenario(&format!("additional_scenarios[{i}]"), s);
        }
        let mut ids = BTreeSet::new();
        for (i, s) in m.scenarios().enumerate() {
            if !ids.insert(s.id.as_str()) {
                self.err(format!("additional_scenarios[{}].id", i - 1), format!("duplicate scenario id '{}'", s.id));
            }
        }
    }

    fn parameters(&mut self, m: &RegionModel) {
        if m.parameters.is_empty() {
            self.err("parameters", "parameters must be non-empty");
        }
        for (i, p) in m.parameters.iter().enumerate() {
            let path = format!("parameters[{i}]");
            if p.id.trim().is_empty() {
                self.err(format!("{path}.id"), "parameter id must be non-empty");
            } else if !self.params.insert(p.id.clone()) {
                self.err(format!("{path}.id"), format!("duplicate parameter id '{}'", p.id));
            }
            if p.domain.trim().is_empty() {
                self.err(format!("{path}.domain"), "domain must be non-empty");
            }
            if let Some(b) = &p.bounds {
                let finite = b.lower.is_none_or(f64::is_finite) && b.upper.is_none_or(f64::is_finite);
                if !finite {
                    self.err(format!("{path}.bounds"), "bounds must be finite");
                } else if let (Some(lo), Some(hi)) = (b.lower, b.upper) {
                    if lo > hi {
                        self.err(format!("{path}.bounds"), format!("lower bound {lo} exceeds upper bound {hi}"));
                    }
                }
            }
        }
    }

    fn series(&mut self, m: &RegionModel) {
        let mut seen = BTreeSet::new();
        for (i, s) in m.series.iter().enumerate() {
            let path = format!("series[{i}]");
            self.param_ref(format!("{path}.parameter_id"), &s.parameter_id);
            if !seen.insert(s.parameter_id.as_str()) {
                self.err(format!("{path}.parameter_id"), format!("duplicate series for '{}'", s.parameter_id));
            }
            for (k, w) in s.observations.windows(2).enumerate() {
                if w[1].0 <= w[0].0 {
                    self.err(
                        format!("{path}.observations[{}]", k + 1),
                        format!("years must be strictly increasing ({} after {})", w[1].0, w[0].0),
                    );
                }
            }
            for (k, o) in s.observations.iter().enumerate() {
                if !o.1.is_finite() {
                    self.err(format!("{path}.observations[{k}]"), "value must be finite");
                }
            }
        }
    }

    fn adjacency(&mut self, adj: &AdjacencyMatrix) {
        let n = adj.variables.len();
        let mut seen = BTreeSet::new();
        for (i, v) in adj.variables.iter().enumerate() {
            self.param_ref(format!("adjacency.variables[{i}]"), v);
            if !seen.insert(v.as_str()) {
                self.err(format!("adjacency.variables[{i}]"), format!("duplicate variable '{v}'"));
            }
        }
        if adj.related.len() != n {
            self.err("adjacency.related", format!("expected {n} rows, found {}", adj.related.len()));
            return;
        }
        for (i, row) in adj.related.iter().enumerate() {
            if row.len() != n {
                self.err(format!("adjacency.related[{i}]"), format!("expected {n} columns, found {}", row.len()));
            } else if !row[i] {
                self.err(format!("adjacency.related[{i}][{i}]"), "diagonal must be true");
            }
        }
    }

    fn actors(&mut self, m: &RegionModel) {
        if m.actors.is_empty() {
            self.err("actors", "actors must be non-empty");
        }
        for (i, a) in m.actors.iter().enumerate() {
            let path = format!("actors[{i}]");
            if a.id.trim().is_empty() {
                self.err(format!("{path}.id"), "actor id must be non-empty");
            } else if !self.actors.insert(a.id.clone()) {
                self.err(format!("{path}.id"), format!("duplicate actor id '{}'", a.id));
            }
            self.actor_body(&path, a);
        }
    }

    fn coefficients(&mut self, path: &str, coefs: &BTreeMap<String, f64>) {
        for (id, c) in coefs {
            self.param_ref(format!("{path}.{id}"), id);
            if !c.is_finite() {
                self.err(format!("{path}.{id}"), "coefficient must be finite");
            }
        }
    }

    fn actor_body(&mut self, path: &str, a: &ActorSpec) {
        if a.goals.is_empty() {
            self.err(format!("{path}.goals"), format!("actor '{}' must have at least one goal", a.id));
        }
        self.coefficients(&format!("{path}.objective_coefficients"), &a.objective_coefficients);
        for (g, goal) in a.goals.iter().enumerate() {
            let gp = format!("{path}.goals[{g}]");
            if goal.expression_coefficients.is_empty() {
                self.err(format!("{gp}.expression_coefficients"), "goal expression must be non-empty");
            }
            self.coefficients(&format!("{gp}.expression_coefficients"), &goal.expression_coefficients);
            if !goal.target.is_finite() {
                self.err(format!("{gp}.target"), "target must be finite");
            }
            if !(goal.weight.is_finite() && goal.weight > 0.0) {
                self.err(format!("{gp}.weight"), format!("weight must be > 0, found {}", goal.weight));
            }
        }
        for (c, con) in a.constraints.iter().enumerate() {
            let cp = format!("{path}.constraints[{c}]");
            if !con.coefficients.values().any(|&x| x != 0.0) {
                self.err(format!("{cp}.coefficients"), "constraint needs at least one nonzero coefficient");
            }
            self.coefficients(&format!("{cp}.coefficients"), &con.coefficients);
            match &con.rhs {
                Rhs::Value(v) if !v.is_finite() => self.err(format!("{cp}.rhs"), "rhs must be finite"),
                Rhs::Value(_) => {}
                Rhs::Projected { projected, scale } => {
                    self.param_ref(format!("{cp}.rhs.projected"), projected);
                    if !scale.is_finite() {
                        self.err(format!("{cp}.rhs.scale"), "scale must be finite");
                    }
                }
            }
        }
    }

    fn scenario(&mut self, path: &str, net: &ScenarioNetwork) {
        if !(net.weight.is_finite() && net.weight > 0.0) {
            self.err(format!("{path}.weight"), format!("scenario weight must be > 0, found {}", net.weight));
        }
        if let Err(e) = bbn::validate_network(net) {
            self.err(format!("{path}.{}", e.path()), e.to_string());
            return;
        }
        for (i, node) in net.nodes.iter().enumerate() {
            let np = format!("{path}.nodes[{i}].root_mapping");
            match &node.root_mapping {
                Some(RootMapping::ParameterTrend { parameter_id, .. }) => {
                    self.param_ref(format!("{np}.parameter_id"), parameter_id)
                }
                Some(RootMapping::ActorAttainment { actor_id, .. }) if !self.actors.contains(actor_id) => {
                    self.err(format!("{np}.actor_id"), format!("unknown actor '{actor_id}'"))
                }
                _ => {}
            }
        }
    }
}
