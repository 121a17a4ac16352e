//! Edits against a completed run, recomputing only downstream stages.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::bbn::RootMapping;
use crate::model::{ActorSpec, RegionModel, TheoryId};
use crate::scenario::{
    assemble, domain_states, fit_trends, model_fingerprint, simulate_years, solve_actor, solve_actors, Parts,
    PipelineError, PipelineRun, RunConfig, Stage, TrendOverride, YearExecutor,
};
use crate::theory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Edit {
    AddActor {
        actor: ActorSpec,
    },
    RemoveActor {
        actor_id: String,
    },
    OverrideTrend {
        parameter_id: String,
        slope: f64,
        intercept: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        residual_std: Option<f64>,
    },
    SetTheory {
        theory: TheoryId,
    },
    /// `scenario_id` defaults to the primary scenario.
    OverrideRootMapping {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scenario_id: Option<String>,
        node_id: String,
        root_mapping: RootMapping,
    },
    SetTripwire {
        tripwire: f64,
    },
}

impl Edit {
    /// Earliest stage whose output the edit invalidates.
    pub fn stage(&self) -> Stage {
        match self {
            Self::OverrideTrend { .. } => Stage::Trends,
            Self::SetTheory { .. } => Stage::Theory,
            Self::AddActor { .. } | Self::RemoveActor { .. } => Stage::Actors,
            Self::OverrideRootMapping { .. } => Stage::Inference,
            Self::SetTripwire { .. } => Stage::Report,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WhatIfError {
    ModelMismatch { expected: String, found: String },
    BadEdit { index: usize, message: String },
    Pipeline(PipelineError),
}

impl fmt::Display for WhatIfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ModelMismatch { expected, found } => {
                write!(f, "model fingerprint {found} does not match parent run's {expected}")
            }
            Self::BadEdit { index, message } => write!(f, "edits[{index}]: {message}"),
            Self::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for WhatIfError {}

impl From<PipelineError> for WhatIfError {
    fn from(e: PipelineError) -> Self {
        Self::Pipeline(e)
    }
}

/// Applies edits in order; returns the edited model and config.
pub fn apply_edits(
    model: &RegionModel,
    config: &RunConfig,
    edits: &[Edit],
) -> Result<(RegionModel, RunConfig), WhatIfError> {
    let mut m = model.clone();
    let mut c = config.clone();
    for (index, e) in edits.iter().enumerate() {
        let bad = |message: String| WhatIfError::BadEdit { index, message };
        match e {
            Edit::AddActor { actor } => {
                if m.actors.iter().any(|a| a.id == actor.id) {
                    return Err(bad(format!("actor '{}' already exists", actor.id)));
                }
                m.actors.push(actor.clone());
            }
            Edit::RemoveActor { actor_id } => {
                let before = m.actors.len();
                m.actors.retain(|a| &a.id != actor_id);
                if m.actors.len() == before {
                    return Err(bad(format!("unknown actor '{actor_id}'")));
                }
            }
            Edit::OverrideTrend { parameter_id, slope, intercept, residual_std } => {
                if m.series_for(parameter_id).is_none() {
                    return Err(bad(format!("unknown parameter '{parameter_id}'")));
                }
                c.trend_overrides.insert(
                    parameter_id.clone(),
                    TrendOverride { slope: *slope, intercept: *intercept, residual_std: *residual_std },
                );
            }
            Edit::SetTheory { theory: t } => {
                if !theory::is_registered(t) {
                    return Err(bad(format!("theory '{}' is not registered", serde_json::to_string(t).unwrap_or_default())));
                }
                m.theory = t.clone();
            }
            Edit::OverrideRootMapping { scenario_id, node_id, root_mapping } => {
                let net = match scenario_id {
                    None => &mut m.scenario_template,
                    Some(id) if m.scenario_template.id == *id => &mut m.scenario_template,
                    Some(id) => m
                        .additional_scenarios
                        .iter_mut()
                        .find(|s| &s.id == id)
                        .ok_or_else(|| bad(format!("unknown scenario '{id}'")))?,
                };
                let node = net.node_mut(node_id).ok_or_else(|| bad(format!("unknown node '{node_id}'")))?;
                if !node.parents.is_empty() {
                    return Err(bad(format!("node '{node_id}' is not a root")));
                }
                node.root_mapping = Some(root_mapping.clone());
            }
            Edit::SetTripwire { tripwire } => c.tripwire = *tripwire,
        }
    }
    c.validate().map_err(|e| WhatIfError::BadEdit { index: edits.len().saturating_sub(1), message: e.message })?;
    m.validate().map_err(|e| WhatIfError::BadEdit { index: edits.len().saturating_sub(1), message: e.to_string() })?;
    Ok((m, c))
}

/// Child run equivalent to a full pipeline on the edited model.
pub fn what_if(
    model: &RegionModel,
    parent: &PipelineRun,
    edits: &[Edit],
    exec: &dyn YearExecutor,
) -> Result<(RegionModel, PipelineRun), WhatIfError> {
    let found = model_fingerprint(model);
    if found != parent.model_fingerprint {
        return Err(WhatIfError::ModelMismatch { expected: parent.model_fingerprint.clone(), found });
    }
    let (child, config) = apply_edits(model, &parent.config, edits)?;
    let earliest = edits.iter().map(Edit::stage).min().unwrap_or(Stage::Report);

    let trends = if earliest <= Stage::Trends { fit_trends(&child, &config)? } else { parent.trends.clone() };
    let years: Vec<i32> = parent.per_year.iter().map(|y| y.year).collect();

    let per_year = if earliest <= Stage::Inference {
        let states = domain_states(&child, &trends, &years)?;
        let attainments: Vec<BTreeMap<String, f64>> = if earliest <= Stage::Theory {
            solve_actors(&child, &states, &years)?
        } else if earliest == Stage::Actors {
            // Actors are independent: keep surviving results, solve new ones.
            let mut out = Vec::with_capacity(years.len());
            for (k, y) in parent.per_year.iter().enumerate() {
                let mut row = BTreeMap::new();
                for a in &child.actors {
                    let v = match y.attainments.get(&a.id) {
                        Some(&v) if model.actors.iter().any(|p| p == a) => v,
                        _ => solve_actor(a, &states[k], y.year)?.attainment,
                    };
                    row.insert(a.id.clone(), v);
                }
                out.push(row);
            }
            out
        } else {
            parent.per_year.iter().map(|y| y.attainments.clone()).collect()
        };
        simulate_years(&child, &config, &years, &states, &attainments, exec)?
    } else {
        parent.per_year.clone()
    };

    let parts = Parts { analysis: parent.analysis.clone(), trends, per_year };
    let run = assemble(&child, &config, parts, Some(parent.run_id.as_str()), edits);
    Ok((child, run))
}

pub fn edit_kind(e: &Edit) -> String {
    match e {
        Edit::AddActor { .. } => "add_actor",
        Edit::RemoveActor { .. } => "remove_actor",
        Edit::OverrideTrend { .. } => "override_trend",
        Edit::SetTheory { .. } => "set_theory",
        Edit::OverrideRootMapping { .. } => "override_root_mapping",
        Edit::SetTripwire { .. } => "set_tripwire",
    }
    .to_string()
}
