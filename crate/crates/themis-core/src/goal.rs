//! Weighted goal programming for actors over projected domain constraints.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use libm::fabs;
use serde::{Deserialize, Serialize};

use crate::lp::{self, Constraint, LinearProgram, LpStatus, Sense, VariableBound};
use crate::model::{ActorSpec, Goal, Relation, Rhs};

/// Constraint with a numeric right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConstraint {
    pub coefficients: BTreeMap<String, f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalProgram {
    pub actor_id: String,
    pub horizon_year: i32,
    pub decision_variables: Vec<String>,
    pub goals: Vec<Goal>,
    pub constraints: Vec<ResolvedConstraint>,
    /// Parallel to `decision_variables`.
    pub variable_bounds: Vec<VariableBound>,
    /// Secondary objective, maximized among goal-optimal solutions.
    pub objective: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GoalError {
    #[error("actor '{actor}' references parameter '{parameter}' with no projected state")]
    MissingState { actor: String, parameter: String },
    #[error("actor '{actor}' references undeclared variable '{variable}'")]
    UndeclaredVariable { actor: String, variable: String },
    #[error("actor '{actor}' goal {goal} has non-positive weight")]
    BadWeight { actor: String, goal: usize },
}

pub fn build_goal_program(
    actor: &ActorSpec,
    domain_state: &BTreeMap<String, (f64, f64)>,
    horizon_year: i32,
) -> Result<GoalProgram, GoalError> {
    let missing = |p: &str| GoalError::MissingState { actor: actor.id.clone(), parameter: p.to_string() };
    let mut constraints = Vec::with_capacity(actor.constraints.len());
    for c in &actor.constraints {
        if let Some(p) = c.coefficients.keys().find(|p| !domain_state.contains_key(*p)) {
            return Err(missing(p));
        }
        let rhs = match &c.rhs {
            Rhs::Value(v) => *v,
            Rhs::Projected { projected, scale } => scale * domain_state.get(projected).ok_or_else(|| missing(projected))?.0,
        };
        constraints.push(ResolvedConstraint { coefficients: c.coefficients.clone(), relation: c.relation, rhs });
    }
    let decision_variables = actor.referenced_parameters();
    Ok(GoalProgram {
        actor_id: actor.id.clone(),
        horizon_year,
        variable_bounds: vec![VariableBound::default(); decision_variables.len()],
        decision_variables,
        goals: actor.goals.clone(),
        constraints,
        objective: actor.objective_coefficients.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub under: f64,
    pub over: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttainmentResult {
    pub actor_id: String,
    pub variable_values: BTreeMap<String, f64>,
    pub deviations: Vec<Deviation>,
    /// `Σ weight · penalized deviation / max(|target|, 1)`.
    pub weighted_deviation: f64,
    pub attainment: f64,
    pub status: LpStatus,
}

fn dense(map: &BTreeMap<String, f64>, index: &BTreeMap<&str, usize>, width: usize) -> Result<Vec<f64>, String> {
    let mut row = vec![0.0; width];
    for (k, v) in map {
        row[*index.get(k.as_str()).ok_or_else(|| k.clone())?] += v;
    }
    Ok(row)
}

pub fn goal_scale(g: &Goal) -> f64 {
    fabs(g.target).max(1.0)
}

/// Minimizes the normalized weighted deviation sum; when the actor has an
/// objective, a second solve maximizes it without worsening that sum.
pub fn solve_goal_program(gp: &GoalProgram) -> Result<AttainmentResult, GoalError> {
    let n = gp.decision_variables.len();
    let g = gp.goals.len();
    let width = n + 2 * g;
    let index: BTreeMap<&str, usize> = gp.decision_variables.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let undeclared = |variable: String| GoalError::UndeclaredVariable { actor: gp.actor_id.clone(), variable };

    let mut constraints = Vec::with_capacity(gp.constraints.len() + g + 1);
    for c in &gp.constraints {
        constraints.push(Constraint { coefficients: dense(&c.coefficients, &index, width).map_err(undeclared)?, relation: c.relation, rhs: c.rhs });
    }
    let mut cost = vec![0.0; width];
    for (k, goal) in gp.goals.iter().enumerate() {
        if !(goal.weight > 0.0) {
            return Err(GoalError::BadWeight { actor: gp.actor_id.clone(), goal: k });
        }
        let mut row = dense(&goal.expression_coefficients, &index, width).map_err(undeclared)?;
        row[n + 2 * k] = 1.0;
        row[n + 2 * k + 1] = -1.0;
        constraints.push(Constraint { coefficients: row, relation: Relation::Eq, rhs: goal.target });
        let w = goal.weight / goal_scale(goal);
        if goal.penalize.under() {
            cost[n + 2 * k] = w;
        }
        if goal.penalize.over() {
            cost[n + 2 * k + 1] = w;
        }
    }
    let mut bounds = gp.variable_bounds.clone();
    bounds.resize(width, VariableBound::default());
    let mut program = LinearProgram { sense: Sense::Minimize, objective: cost.clone(), constraints, bounds };
    let first = lp::solve(&program);
    let weight_sum: f64 = gp.goals.iter().map(|g| g.weight).sum();
    if first.status != LpStatus::Optimal {
        return Ok(AttainmentResult {
            actor_id: gp.actor_id.clone(),
            variable_values: BTreeMap::new(),
            deviations: Vec::new(),
            weighted_deviation: f64::NAN,
            attainment: 0.0,
            status: first.status,
        });
    }
    let mut z = first.objective_value.max(0.0);
    if z <= 1e-12 {
        z = 0.0;
    }
    let mut values = first.values;
    if gp.objective.values().any(|&c| c != 0.0) {
        let obj = dense(&gp.objective, &index, width).map_err(undeclared)?;
        program.constraints.push(Constraint { coefficients: cost, relation: Relation::Le, rhs: z + 1e-9 * (1.0 + z) });
        program.sense = Sense::Maximize;
        program.objective = obj;
        let second = lp::solve(&program);
        if second.status == LpStatus::Optimal {
            values = second.values;
        }
    }
    let deviations = (0..g).map(|k| Deviation { under: values[n + 2 * k], over: values[n + 2 * k + 1] }).collect();
    Ok(AttainmentResult {
        actor_id: gp.actor_id.clone(),
        variable_values: gp.decision_variables.iter().cloned().zip(values[..n].iter().copied()).collect(),
        deviations,
        weighted_deviation: z,
        attainment: 1.0 - (z / weight_sum).min(1.0),
        status: LpStatus::Optimal,
    })
}

/// Descending attainment; equal attainments by actor id.
pub fn rank_actors(results: &[AttainmentResult]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = results.iter().map(|r| (r.actor_id.clone(), r.attainment)).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
