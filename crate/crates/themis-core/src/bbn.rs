//! Discrete Bayesian belief networks: validation, exact inference by variable
//! elimination, a joint-enumeration oracle, root-prior mapping and sensitivity.
//!
//! The first state of every node is the event state; "P(intervention)" means
//! the probability of the intervention node's first state.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math::logistic;

/// CPT rows must sum to 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Largest joint state space `enumerate_joint` will walk.
pub const MAX_ENUMERATION_STATES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum RootMapping {
    ParameterTrend { parameter_id: String, threshold: f64, scale: f64, direction: Direction },
    ActorAttainment {
        actor_id: String,
        #[serde(default)]
        invert: bool,
    },
    Constant { p: f64 },
}

fn binary_states() -> Vec<String> {
    vec!["true".into(), "false".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbnNode {
    pub id: String,
    #[serde(default = "binary_states")]
    pub states: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    /// One row per parent-state combination, row-major in declared parent order
    /// (last parent varies fastest); each row is a distribution over `states`.
    pub cpt: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_mapping: Option<RootMapping>,
}

fn default_scenario_id() -> String {
    "scenario".into()
}

fn one() -> f64 {
    1.0
}

#[allow(clippy::trivially_copy_pass_by_ref)]
fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioNetwork {
    #[serde(default = "default_scenario_id")]
    pub id: String,
    /// Aggregation weight among the model's scenarios.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    pub nodes: Vec<BbnNode>,
    pub intervention_node: String,
}

impl ScenarioNetwork {
    pub fn node(&self, id: &str) -> Option<&BbnNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut BbnNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    /// Parent → child pairs.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.nodes
            .iter()
            .flat_map(|n| n.parents.iter().map(move |p| (p.clone(), n.id.clone())))
            .collect()
    }

    pub fn roots(&self) -> impl Iterator<Item = &BbnNode> {
        self.nodes.iter().filter(|n| n.parents.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BbnError {
    #[error("network has no nodes")]
    Empty,
    #[error("node id must be non-empty")]
    EmptyId { node: usize },
    #[error("duplicate node id '{id}'")]
    DuplicateNode { node: usize, id: String },
    #[error("node '{id}' needs at least 2 distinct states")]
    BadStates { node: usize, id: String },
    #[error("node '{id}' has unknown parent '{parent}'")]
    UnknownParent { node: usize, id: String, parent: String },
    #[error("node '{id}' lists parent '{parent}' twice")]
    DuplicateParent { node: usize, id: String, parent: String },
    #[error("cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("node '{id}' CPT needs {expected} rows, found {found}")]
    CptRows { node: usize, id: String, expected: usize, found: usize },
    #[error("node '{id}' CPT row {row} needs {expected} entries, found {found}")]
    CptRowLen { node: usize, id: String, row: usize, expected: usize, found: usize },
    #[error("node '{id}' CPT row {row} has probability {value} outside [0, 1]")]
    BadProbability { node: usize, id: String, row: usize, value: f64 },
    #[error("node '{id}' CPT row {row} sums to {sum}, not 1")]
    RowSum { node: usize, id: String, row: usize, sum: f64 },
    #[error("root_mapping on non-root node '{id}'")]
    MappingOnChild { node: usize, id: String },
    #[error("node '{id}' root_mapping: {reason}")]
    BadMapping { node: usize, id: String, reason: String },
    #[error("intervention node '{0}' not found")]
    UnknownIntervention(String),
    #[error("intervention node '{0}' must be binary")]
    InterventionNotBinary(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("node '{node}' has no state '{state}'")]
    UnknownState { node: String, state: String },
    #[error("evidence has zero probability; posterior undefined")]
    ContradictoryEvidence,
    #[error("joint state space of {0} states exceeds the enumeration limit")]
    StateSpaceTooLarge(u128),
    #[error("node '{0}' is not a root")]
    NotRoot(String),
    #[error("node '{node}' root source '{source_id}' cannot be resolved")]
    UnresolvedSource { node: String, source_id: String },
}

impl BbnError {
    /// Location inside the network document.
    pub fn path(&self) -> String {
        match self {
            Self::EmptyId { node } | Self::DuplicateNode { node, .. } => format!("nodes[{node}].id"),
            Self::BadStates { node, .. } => format!("nodes[{node}].states"),
            Self::UnknownParent { node, .. } | Self::DuplicateParent { node, .. } => {
                format!("nodes[{node}].parents")
            }
            Self::CptRows { node, .. } => format!("nodes[{node}].cpt"),
            Self::CptRowLen { node, row, .. }
            | Self::BadProbability { node, row, .. }
            | Self::RowSum { node, row, .. } => format!("nodes[{node}].cpt[{row}]"),
            Self::MappingOnChild { node, .. } | Self::BadMapping { node, .. } => {
                format!("nodes[{node}].root_mapping")
            }
            Self::UnknownIntervention(_) | Self::InterventionNotBinary(_) => "intervention_node".into(),
            _ => "nodes".into(),
        }
    }
}

/// Index-based form of a validated network.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub ids: Vec<String>,
    pub states: Vec<Vec<String>>,
    pub card: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    /// Flattened CPT: `rows × card[node]`, node state fastest.
    pub cpt: Vec<Vec<f64>>,
    pub intervention: usize,
    /// Topological order.
    pub order: Vec<usize>,
}

impl Compiled {
    pub fn index(&self, id: &str) -> Result<usize, BbnError> {
        self.ids.iter().position(|x| x == id).ok_or_else(|| BbnError::UnknownNode(id.to_string()))
    }

    pub fn state_index(&self, node: usize, state: &str) -> Result<usize, BbnError> {
        self.states[node].iter().position(|s| s == state).ok_or_else(|| BbnError::UnknownState {
            node: self.ids[node].clone(),
            state: state.to_string(),
        })
    }

    /// Replaces a root's distribution; state 0 gets `p`, the rest keep their
    /// relative proportions (uniform if they were all zero).
    pub fn set_root_prior(&mut self, node: usize, p: f64) {
        debug_assert!(self.parents[node].is_empty());
        let p = p.clamp(0.0, 1.0);
        let row = &mut self.cpt[node];
        let rest: f64 = row[1..].iter().sum();
        let k = row.len() - 1;
        row[0] = p;
        for x in row[1..].iter_mut() {
            *x = if rest > 0.0 { *x / rest * (1.0 - p) } else { (1.0 - p) / k as f64 };
        }
    }

    pub fn root_prior(&self, node: usize) -> f64 {
        self.cpt[node][0]
    }

    fn cpt_row(&self, node: usize, assignment: &[usize]) -> usize {
        self.parents[node].iter().fold(0, |acc, &p| acc * self.card[p] + assignment[p])
    }
}

pub fn validate_network(net: &ScenarioNetwork) -> Result<(), BbnError> {
    compile(net).map(|_| ())
}

pub fn compile(net: &ScenarioNetwork) -> Result<Compiled, BbnError> {
    if net.nodes.is_empty() {
        return Err(BbnError::Empty);
    }
    let mut index = BTreeMap::new();
    for (i, n) in net.nodes.iter().enumerate() {
        if n.id.is_empty() {
            return Err(BbnError::EmptyId { node: i });
        }
        if index.insert(n.id.as_str(), i).is_some() {
            return Err(BbnError::DuplicateNode { node: i, id: n.id.clone() });
        }
        let mut s = n.states.clone();
        s.sort();
        s.dedup();
        if n.states.len() < 2 || s.len() != n.states.len() {
            return Err(BbnError::BadStates { node: i, id: n.id.clone() });
        }
    }
    let mut parents = Vec::with_capacity(net.nodes.len());
    for (i, n) in net.nodes.iter().enumerate() {
        let mut ps = Vec::new();
        for p in &n.parents {
            let &pi = index.get(p.as_str()).ok_or_else(|| BbnError::UnknownParent {
                node: i,
                id: n.id.clone(),
                parent: p.clone(),
            })?;
            if ps.contains(&pi) {
                return Err(BbnError::DuplicateParent { node: i, id: n.id.clone(), parent: p.clone() });
            }
            ps.push(pi);
        }
        parents.push(ps);
    }
    let order = topological_order(&parents).map_err(|cyc| {
        BbnError::Cycle(cyc.into_iter().map(|i| net.nodes[i].id.clone()).collect())
    })?;
    let card: Vec<usize> = net.nodes.iter().map(|n| n.states.len()).collect();
    let mut cpt = Vec::with_capacity(net.nodes.len());
    for (i, n) in net.nodes.iter().enumerate() {
        let rows: usize = parents[i].iter().map(|&p| card[p]).product();
        if n.cpt.len() != rows {
            return Err(BbnError::CptRows { node: i, id: n.id.clone(), expected: rows, found: n.cpt.len() });
        }
        let mut flat = Vec::with_capacity(rows * card[i]);
        for (r, row) in n.cpt.iter().enumerate() {
            if row.len() != card[i] {
                return Err(BbnError::CptRowLen {
                    node: i,
                    id: n.id.clone(),
                    row: r,
                    expected: card[i],
                    found: row.len(),
                });
            }
            if let Some(&value) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(BbnError::BadProbability { node: i, id: n.id.clone(), row: r, value });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(BbnError::RowSum { node: i, id: n.id.clone(), row: r, sum });
            }
            flat.extend_from_slice(row);
        }
        cpt.push(flat);
        if let Some(m) = &n.root_mapping {
            if !parents[i].is_empty() {
                return Err(BbnError::MappingOnChild { node: i, id: n.id.clone() });
            }
            let bad = |reason: &str| BbnError::BadMapping { node: i, id: n.id.clone(), reason: reason.into() };
            match m {
                RootMapping::ParameterTrend { threshold, scale, .. } => {
                    if !threshold.is_finite() {
                        return Err(bad("threshold must be finite"));
                    }
                    if !(scale.is_finite() && *scale > 0.0) {
                        return Err(bad("scale must be > 0"));
                    }
                }
                RootMapping::Constant { p } if !(0.0..=1.0).contains(p) => {
                    return Err(bad("constant p must lie in [0, 1]"));
                }
                _ => {}
            }
        }
    }
    let &intervention = index
        .get(net.intervention_node.as_str())
        .ok_or_else(|| BbnError::UnknownIntervention(net.intervention_node.clone()))?;
    if card[intervention] != 2 {
        return Err(BbnError::InterventionNotBinary(net.intervention_node.clone()));
    }
    Ok(Compiled {
        ids: net.nodes.iter().map(|n| n.id.clone()).collect(),
        states: net.nodes.iter().map(|n| n.states.clone()).collect(),
        card,
        parents,
        cpt,
        intervention,
        order,
    })
}

/// Kahn's algorithm; on failure returns one cycle in edge order.
fn topological_order(parents: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (c, ps) in parents.iter().enumerate() {
        indeg[c] = ps.len();
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in children[v].iter().rev() {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Walk parent links inside the residual graph until a node repeats.
    let start = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
    let mut path = vec![start];
    let mut v = start;
    loop {
        let next = parents[v].iter().copied().find(|&p| indeg[p] > 0).unwrap_or(v);
        if let Some(pos) = path.iter().position(|&x| x == next) {
            let mut cyc: Vec<usize> = path[pos..].to_vec();
            cyc.reverse();
            let min = cyc.iter().enumerate().min_by_key(|(_, &x)| x).map_or(0, |(i, _)| i);
            cyc.rotate_left(min);
            return Err(cyc);
        }
        path.push(next);
        v = next;
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    vars: Vec<usize>,
    card: Vec<usize>,
    /// Row-major, last variable fastest.
    table: Vec<f64>,
}

impl Factor {
    fn from_node(c: &Compiled, node: usize) -> Self {
        let mut vars = c.parents[node].clone();
        vars.push(node);
        let card = vars.iter().map(|&v| c.card[v]).collect();
        Self { vars, card, table: c.cpt[node].clone() }
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.card[i + 1];
        }
        s
    }

    fn stride_of(&self, strides: &[usize], v: usize) -> usize {
        self.vars.iter().position(|&x| x == v).map_or(0, |i| strides[i])
    }

    fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        for (i, &v) in other.vars.iter().enumerate() {
            if !vars.contains(&v) {
                vars.push(v);
                card.push(other.card[i]);
            }
        }
        let (sa, sb) = (self.strides(), other.strides());
        let a_str: Vec<usize> = vars.iter().map(|&v| self.stride_of(&sa, v)).collect();
        let b_str: Vec<usize> = vars.iter().map(|&v| other.stride_of(&sb, v)).collect();
        let size: usize = card.iter().product();
        let mut table = Vec::with_capacity(size);
        let mut assign = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            table.push(self.table[ia] * other.table[ib]);
            for k in (0..vars.len()).rev() {
                assign[k] += 1;
                ia += a_str[k];
                ib += b_str[k];
                if assign[k] < card[k] {
                    break;
                }
                ia -= a_str[k] * card[k];
                ib -= b_str[k] * card[k];
                assign[k] = 0;
            }
        }
        Factor { vars, card, table }
    }

    fn sum_out(&self, v: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&x| x == v) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(pos);
        card.remove(pos);
        let inner: usize = self.card[pos + 1..].iter().product();
        let k = self.card[pos];
        let outer = self.table.len() / (inner * k);
        let mut table = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..k {
                let base = (o * k + s) * inner;
                for i in 0..inner {
                    table[o * inner + i] += self.table[base + i];
                }
            }
        }
        Factor { vars, card, table }
    }

    fn reduce(&self, v: usize, state: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&x| x == v) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(pos);
        card.remove(pos);
        let inner: usize = self.card[pos + 1..].iter().product();
        let k = self.card[pos];
        let outer = self.table.len() / (inner * k);
        let mut table = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * k + state) * inner;
            table.extend_from_slice(&self.table[base..base + inner]);
        }
        Factor { vars, card, table }
    }
}

/// Elimination ordering strategy. Exactness does not depend on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Elimination {
    MinDegree,
    /// Variables in this order; any omitted are eliminated afterwards by index.
    Fixed(Vec<usize>),
}

fn min_degree_order(n: usize, scopes: &[Vec<usize>], eliminate: &[bool]) -> Vec<usize> {
    let mut adj = vec![vec![false; n]; n];
    for s in scopes {
        for &a in s {
            for &b in s {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
    }
    let mut alive = eliminate.to_vec();
    let mut order = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            let deg = (0..n).filter(|&u| u != v && adj[v][u]).count();
            if best.is_none_or(|(_, d)| deg < d) {
                best = Some((v, deg));
            }
        }
        let Some((v, _)) = best else { break };
        let nb: Vec<usize> = (0..n).filter(|&u| u != v && adj[v][u]).collect();
        for &a in &nb {
            for &b in &nb {
                if a != b {
                    adj[a][b] = true;
                }
            }
            adj[a][v] = false;
        }
        adj[v].iter_mut().for_each(|x| *x = false);
        alive[v] = false;
        order.push(v);
    }
    order
}

/// Normalized marginal of `query` given `evidence`, plus `P(evidence)`.
pub fn ve_marginal(
    c: &Compiled,
    query: usize,
    evidence: &[(usize, usize)],
    elimination: &Elimination,
) -> Result<(Vec<f64>, f64), BbnError> {
    let n = c.ids.len();
    let mut observed: Vec<Option<usize>> = vec![None; n];
    for &(v, s) in evidence {
        if observed[v].is_some_and(|old| old != s) {
            return Err(BbnError::ContradictoryEvidence);
        }
        observed[v] = Some(s);
    }
    let mut factors: Vec<Factor> = (0..n)
        .map(|v| {
            let mut f = Factor::from_node(c, v);
            for (u, s) in observed.iter().enumerate() {
                if let Some(s) = *s {
                    if u != query {
                        f = f.reduce(u, s);
                    }
                }
            }
            f
        })
        .collect();
    let eliminate: Vec<bool> = (0..n).map(|v| v != query && observed[v].is_none()).collect();
    let order = match elimination {
        Elimination::MinDegree => {
            let scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.vars.clone()).collect();
            min_degree_order(n, &scopes, &eliminate)
        }
        Elimination::Fixed(seq) => {
            let mut o: Vec<usize> = Vec::new();
            for v in seq.iter().copied().chain(0..n) {
                if v < n && eliminate[v] && !o.contains(&v) {
                    o.push(v);
                }
            }
            o
        }
    };
    for v in order {
        let (with, without): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = without;
        if let Some(prod) = with.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(prod.sum_out(v));
        }
    }
    let joint = factors
        .into_iter()
        .reduce(|a, b| a.product(&b))
        .unwrap_or(Factor { vars: Vec::new(), card: Vec::new(), table: vec![1.0] });
    let k = c.card[query];
    let mut marg = if joint.vars.is_empty() { vec![joint.table[0]; 1] } else { joint.table.clone() };
    if let Some(s) = observed[query] {
        let mut one_hot = vec![0.0; k];
        one_hot[s] = marg[s];
        marg = one_hot;
    }
    let z: f64 = marg.iter().sum();
    if !(z > 0.0) {
        return Err(BbnError::ContradictoryEvidence);
    }
    Ok((marg.iter().map(|x| x / z).collect(), z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    pub query_node: String,
    pub states: Vec<String>,
    pub marginal: Vec<f64>,
    pub evidence: BTreeMap<String, String>,
    pub evidence_probability: f64,
}

fn resolve_evidence(c: &Compiled, evidence: &BTreeMap<String, String>) -> Result<Vec<(usize, usize)>, BbnError> {
    evidence
        .iter()
        .map(|(node, state)| {
            let v = c.index(node)?;
            Ok((v, c.state_index(v, state)?))
        })
        .collect()
}

pub fn infer(
    net: &ScenarioNetwork,
    query: &str,
    evidence: &BTreeMap<String, String>,
) -> Result<PosteriorReport, BbnError> {
    let c = compile(net)?;
    infer_compiled(&c, query, evidence, &Elimination::MinDegree)
}

pub fn infer_compiled(
    c: &Compiled,
    query: &str,
    evidence: &BTreeMap<String, String>,
    elimination: &Elimination,
) -> Result<PosteriorReport, BbnError> {
    let q = c.index(query)?;
    let ev = resolve_evidence(c, evidence)?;
    let (marginal, z) = ve_marginal(c, q, &ev, elimination)?;
    Ok(PosteriorReport {
        query_node: query.to_string(),
        states: c.states[q].clone(),
        marginal,
        evidence: evidence.clone(),
        evidence_probability: z,
    })
}

/// Posterior by summing the full joint in a fixed order (first node most
/// significant).
pub fn enumerate_joint(
    net: &ScenarioNetwork,
    query: &str,
    evidence: &BTreeMap<String, String>,
) -> Result<PosteriorReport, BbnError> {
    let c = compile(net)?;
    enumerate_compiled(&c, query, evidence)
}

pub fn enumerate_compiled(
    c: &Compiled,
    query: &str,
    evidence: &BTreeMap<String, String>,
) -> Result<PosteriorReport, BbnError> {
    let q = c.index(query)?;
    let ev = resolve_evidence(c, evidence)?;
    let total: u128 = c.card.iter().map(|&k| k as u128).product();
    if total > MAX_ENUMERATION_STATES as u128 {
        return Err(BbnError::StateSpaceTooLarge(total));
    }
    let n = c.ids.len();
    let mut assign = vec![0usize; n];
    let mut acc = vec![0.0; c.card[q]];
    for _ in 0..total {
        if ev.iter().all(|&(v, s)| assign[v] == s) {
            let mut p = 1.0;
            for v in 0..n {
                p *= c.cpt[v][c.cpt_row(v, &assign) * c.card[v] + assign[v]];
            }
            acc[assign[q]] += p;
        }
        for k in (0..n).rev() {
            assign[k] += 1;
            if assign[k] < c.card[k] {
                break;
            }
            assign[k] = 0;
        }
    }
    let z: f64 = acc.iter().sum();
    if !(z > 0.0) {
        return Err(BbnError::ContradictoryEvidence);
    }
    Ok(PosteriorReport {
        query_node: query.to_string(),
        states: c.states[q].clone(),
        marginal: acc.iter().map(|x| x / z).collect(),
        evidence: evidence.clone(),
        evidence_probability: z,
    })
}

/// Prior of a root's first state implied by its mapping.
pub fn root_probability(
    node: &str,
    mapping: &RootMapping,
    trends: &BTreeMap<String, (f64, f64)>,
    attainments: &BTreeMap<String, f64>,
) -> Result<f64, BbnError> {
    match mapping {
        RootMapping::ParameterTrend { parameter_id, threshold, scale, direction } => {
            let &(mean, _) = trends.get(parameter_id).ok_or_else(|| BbnError::UnresolvedSource {
                node: node.to_string(),
                source_id: parameter_id.clone(),
            })?;
            Ok(trend_probability(mean, *threshold, *scale, *direction))
        }
        RootMapping::ActorAttainment { actor_id, invert } => {
            let &a = attainments.get(actor_id).ok_or_else(|| BbnError::UnresolvedSource {
                node: node.to_string(),
                source_id: actor_id.clone(),
            })?;
            let a = a.clamp(0.0, 1.0);
            Ok(if *invert { 1.0 - a } else { a })
        }
        RootMapping::Constant { p } => Ok(*p),
    }
}

pub fn trend_probability(value: f64, threshold: f64, scale: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Below => logistic((threshold - value) / scale),
        Direction::Above => logistic((value - threshold) / scale),
    }
}

/// Replaces every mapped root's prior.
pub fn map_roots(
    net: &ScenarioNetwork,
    trends: &BTreeMap<String, (f64, f64)>,
    attainments: &BTreeMap<String, f64>,
) -> Result<ScenarioNetwork, BbnError> {
    let mut out = net.clone();
    for node in out.nodes.iter_mut() {
        if let Some(m) = &node.root_mapping {
            let p = root_probability(&node.id, m, trends, attainments)?;
            set_row_prior(&mut node.cpt[0], p);
        }
    }
    Ok(out)
}

/// Sets state 0 to `p`, rescaling the other states proportionally.
pub fn set_row_prior(row: &mut [f64], p: f64) {
    let p = p.clamp(0.0, 1.0);
    let rest: f64 = row[1..].iter().sum();
    let k = row.len() - 1;
    row[0] = p;
    for x in row[1..].iter_mut() {
        *x = if rest > 0.0 { *x / rest * (1.0 - p) } else { (1.0 - p) / k as f64 };
    }
}

pub fn p_intervention(c: &Compiled) -> Result<f64, BbnError> {
    Ok(ve_marginal(c, c.intervention, &[], &Elimination::MinDegree)?.0[0])
}

/// `(p_root, p_intervention)` for the root prior shifted by each delta and
/// clamped to [0, 1].
pub fn sensitivity(net: &ScenarioNetwork, root: &str, deltas: &[f64]) -> Result<Vec<(f64, f64)>, BbnError> {
    let c = compile(net)?;
    sensitivity_compiled(&c, root, deltas)
}

/// `(p_root, p_intervention)` for each absolute root prior.
pub fn sweep(net: &ScenarioNetwork, root: &str, priors: &[f64]) -> Result<Vec<(f64, f64)>, BbnError> {
    let mut c = compile(net)?;
    let r = c.index(root)?;
    if !c.parents[r].is_empty() {
        return Err(BbnError::NotRoot(root.to_string()));
    }
    let mut out = Vec::with_capacity(priors.len());
    for &p in priors {
        let p = p.clamp(0.0, 1.0);
        c.set_root_prior(r, p);
        out.push((p, p_intervention(&c)?));
    }
    Ok(out)
}

pub fn sensitivity_compiled(c: &Compiled, root: &str, deltas: &[f64]) -> Result<Vec<(f64, f64)>, BbnError> {
    let r = c.index(root)?;
    if !c.parents[r].is_empty() {
        return Err(BbnError::NotRoot(root.to_string()));
    }
    let p0 = c.root_prior(r);
    let mut work = c.clone();
    deltas
        .iter()
        .map(|d| {
            let p = (p0 + d).clamp(0.0, 1.0);
            work.set_root_prior(r, p);
            Ok((p, p_intervention(&work)?))
        })
        .collect()
}

/// `P(intervention)` as a multilinear function of a set of binary root priors,
/// tabulated once so repeated evaluation is a dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct RootResponse {
    pub roots: Vec<usize>,
    /// Indexed by mask; bit `i` (LSB = roots[0]) set means root `i` takes its
    /// first state.
    pub values: Vec<f64>,
}

impl RootResponse {
    pub const MAX_ROOTS: usize = 16;

    pub fn new(c: &Compiled, roots: &[usize]) -> Result<Self, BbnError> {
        assert!(roots.len() <= Self::MAX_ROOTS);
        let mut work = c.clone();
        let mut values = Vec::with_capacity(1 << roots.len());
        for mask in 0..(1usize << roots.len()) {
            for (i, &r) in roots.iter().enumerate() {
                debug_assert!(c.parents[r].is_empty() && c.card[r] == 2);
                work.set_root_prior(r, if mask >> i & 1 == 1 { 1.0 } else { 0.0 });
            }
            values.push(p_intervention(&work)?);
        }
        Ok(Self { roots: roots.to_vec(), values })
    }

    pub fn eval(&self, priors: &[f64]) -> f64 {
        debug_assert_eq!(priors.len(), self.roots.len());
        let mut acc = 0.0;
        for (mask, v) in self.values.iter().enumerate() {
            let mut w = 1.0;
            for (i, p) in priors.iter().enumerate() {
                w *= if mask >> i & 1 == 1 { *p } else { 1.0 - *p };
            }
            acc += w * v;
        }
        acc
    }
}
