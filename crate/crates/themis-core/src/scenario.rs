//! End-to-end pipeline: analysis, trends, theory, actors, Monte Carlo
//! inference, aggregation and the intervention index.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use libm::sqrt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    self, estimate_adjacency, estimate_signs, extrapolate, fit_trend, pca, select_key_variables, standardize,
    sub_adjacency, KeyVariableSet, SignMatrix, TrendModel,
};
use crate::bbn::{self, compile, trend_probability, BbnError, Direction, RootMapping, RootResponse, ScenarioNetwork};
use crate::goal::{build_goal_program, rank_actors, solve_goal_program, AttainmentResult};
use crate::math::{mean_std, Z90};
use crate::model::RegionModel;
use crate::rng;
use crate::theory::apply_theory;
use crate::whatif::Edit;

pub const RUN_FORMAT: &str = "themis.run/1";
pub const DEFAULT_SAMPLES: u32 = 1000;
pub const DEFAULT_TRIPWIRE: f64 = 0.5;
/// Root-prior shifts used to rank drivers.
pub const DRIVER_DELTAS: [f64; 5] = [-0.2, -0.1, 0.0, 0.1, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Analysis,
    Trends,
    Theory,
    Actors,
    Inference,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Config => "config",
            Self::Analysis => "analysis",
            Self::Trends => "trends",
            Self::Theory => "theory",
            Self::Actors => "actors",
            Self::Inference => "inference",
            Self::Report => "report",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        Self { stage, message: message.to_string() }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.message)
    }
}

impl core::error::Error for PipelineError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendOverride {
    pub slope: f64,
    pub intercept: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_std: Option<f64>,
}

fn d_seed() -> u64 {
    0
}
fn d_samples() -> u32 {
    DEFAULT_SAMPLES
}
fn d_var() -> f64 {
    analysis::DEFAULT_VARIANCE_THRESHOLD
}
fn d_max() -> usize {
    analysis::DEFAULT_MAX_VARS
}
fn d_r() -> f64 {
    analysis::DEFAULT_R_THRESHOLD
}
fn d_trip() -> f64 {
    DEFAULT_TRIPWIRE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_samples")]
    pub samples: u32,
    #[serde(default = "d_var")]
    pub variance_threshold: f64,
    #[serde(default = "d_max")]
    pub max_vars: usize,
    #[serde(default = "d_r")]
    pub r_threshold: f64,
    #[serde(default = "d_trip")]
    pub tripwire: f64,
    /// Overrides the model's horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_years: Option<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub trend_overrides: BTreeMap<String, TrendOverride>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: d_seed(),
            samples: d_samples(),
            variance_threshold: d_var(),
            max_vars: d_max(),
            r_threshold: d_r(),
            tripwire: d_trip(),
            horizon_years: None,
            trend_overrides: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::new(Stage::Config, m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if !(self.variance_threshold > 0.0 && self.variance_threshold <= 1.0) {
            return bad(format!("variance_threshold must lie in (0, 1], found {}", self.variance_threshold));
        }
        if self.max_vars == 0 {
            return bad("max_vars must be at least 1".into());
        }
        if !(self.r_threshold > 0.0 && self.r_threshold < 1.0) {
            return bad(format!("r_threshold must lie in (0, 1), found {}", self.r_threshold));
        }
        if !(0.0..=1.0).contains(&self.tripwire) {
            return bad(format!("tripwire must lie in [0, 1], found {}", self.tripwire));
        }
        if self.horizon_years == Some(0) {
            return bad("horizon must be at least 1".into());
        }
        for (id, o) in &self.trend_overrides {
            let finite = o.slope.is_finite() && o.intercept.is_finite();
            if !finite || o.residual_std.is_some_and(|s| !(s.is_finite() && s >= 0.0)) {
                return bad(format!("trend override for '{id}' must be finite with residual_std ≥ 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearResult {
    pub year: i32,
    pub p_intervention_mean: f64,
    /// 90% interval for the mean.
    pub p_intervention_ci: (f64, f64),
    pub scenario_probabilities: BTreeMap<String, f64>,
    pub samples_used: u32,
    pub attainments: BTreeMap<String, f64>,
    /// Primary-scenario root priors at the projected means.
    pub root_priors: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub panel_years: (i32, i32),
    pub pca: PcaSummary,
    pub key_variables: KeyVariableSet,
    pub sign_matrix: SignMatrix,
    pub adjacency_estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub format: String,
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_run_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edits: Vec<Edit>,
    pub engine_version: String,
    pub model_fingerprint: String,
    pub region_name: String,
    pub theory: crate::model::TheoryId,
    pub seed: u64,
    pub config: RunConfig,
    pub horizon_years: u32,
    #[serde(flatten)]
    pub analysis: AnalysisOutput,
    pub trends: Vec<TrendModel>,
    /// Final horizon year.
    pub attainments: BTreeMap<String, f64>,
    pub actor_ranking: Vec<(String, f64)>,
    pub per_year: Vec<YearResult>,
    /// Effective scenario templates, primary first.
    pub scenarios: Vec<ScenarioNetwork>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
}

impl PipelineRun {
    pub fn final_year(&self) -> Option<&YearResult> {
        self.per_year.last()
    }

    pub fn year(&self, year: i32) -> Option<&YearResult> {
        self.per_year.iter().find(|y| y.year == year)
    }

    /// Everything except identity, lineage and timestamps.
    pub fn same_numerics(&self, other: &PipelineRun) -> bool {
        self.analysis == other.analysis
            && self.trends == other.trends
            && self.attainments == other.attainments
            && self.actor_ranking == other.actor_ranking
            && self.per_year == other.per_year
    }
}

/// Runs year jobs, returning results in index order.
pub trait YearExecutor: Sync {
    fn map_years(
        &self,
        n: usize,
        job: &(dyn Fn(usize) -> Result<YearResult, PipelineError> + Sync),
    ) -> Vec<Result<YearResult, PipelineError>>;
}

pub struct Sequential;

impl YearExecutor for Sequential {
    fn map_years(
        &self,
        n: usize,
        job: &(dyn Fn(usize) -> Result<YearResult, PipelineError> + Sync),
    ) -> Vec<Result<YearResult, PipelineError>> {
        (0..n).map(job).collect()
    }
}

/// SHA-256 of the model's canonical JSON.
pub fn model_fingerprint(model: &RegionModel) -> String {
    let bytes = serde_json::to_vec(model).unwrap_or_default();
    format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn derive_run_id(fingerprint: &str, config: &RunConfig, parent: Option<&str>, edits: &[Edit]) -> String {
    let mut h = Sha256::new();
    h.update(fingerprint.as_bytes());
    h.update(serde_json::to_vec(config).unwrap_or_default());
    h.update(parent.unwrap_or("").as_bytes());
    h.update(serde_json::to_vec(edits).unwrap_or_default());
    format!("run-{}", &hex::encode(h.finalize())[..16])
}

pub fn analyze(model: &RegionModel, config: &RunConfig) -> Result<AnalysisOutput, PipelineError> {
    let err = |e: analysis::AnalysisError| PipelineError::new(Stage::Analysis, e);
    let panel = standardize(&model.series, None).map_err(err)?;
    let p = pca(&panel).map_err(err)?;
    let keys = select_key_variables(&p, &panel, config.variance_threshold, config.max_vars).map_err(err)?;
    let (adj, estimated) = match &model.adjacency {
        Some(a) => (sub_adjacency(a, &keys.selected), false),
        None => (sub_adjacency(&estimate_adjacency(&panel, config.r_threshold), &keys.selected), true),
    };
    let signs = estimate_signs(&panel, &keys, &adj, config.r_threshold).map_err(err)?;
    Ok(AnalysisOutput {
        panel_years: (panel.years[0], panel.years[panel.years.len() - 1]),
        pca: PcaSummary { eigenvalues: p.eigenvalues, explained_variance_ratio: p.explained_variance_ratio },
        key_variables: keys,
        sign_matrix: signs,
        adjacency_estimated: estimated,
    })
}

/// Trend per series with at least two distinct years, overrides applied.
pub fn fit_trends(model: &RegionModel, config: &RunConfig) -> Result<Vec<TrendModel>, PipelineError> {
    let mut out = Vec::new();
    for s in &model.series {
        let distinct: BTreeSet<i32> = s.observations.iter().map(|o| o.0).collect();
        if distinct.len() < 2 {
            continue;
        }
        out.push(fit_trend(s).map_err(|e| PipelineError::new(Stage::Trends, e))?);
    }
    for (id, o) in &config.trend_overrides {
        let t = out
            .iter_mut()
            .find(|t| &t.parameter_id == id)
            .ok_or_else(|| PipelineError::new(Stage::Trends, format!("override targets unknown trend '{id}'")))?;
        t.slope = o.slope;
        t.intercept = o.intercept;
        if let Some(r) = o.residual_std {
            t.residual_std = r;
        }
    }
    Ok(out)
}

pub fn horizon_years(model: &RegionModel, config: &RunConfig, trends: &[TrendModel]) -> Result<Vec<i32>, PipelineError> {
    let last = trends
        .iter()
        .map(|t| t.fit_window.1)
        .max()
        .ok_or_else(|| PipelineError::new(Stage::Trends, "no series has two distinct years"))?;
    let h = config.horizon_years.unwrap_or(model.horizon_years) as i32;
    Ok((1..=h).map(|k| last + k).collect())
}

pub type DomainState = BTreeMap<String, (f64, f64)>;

/// Projected `(mean, std)` of every trended parameter, theory applied.
pub fn domain_states(model: &RegionModel, trends: &[TrendModel], years: &[i32]) -> Result<Vec<DomainState>, PipelineError> {
    years
        .iter()
        .map(|&y| {
            let mut state = DomainState::new();
            for t in trends {
                let ms = extrapolate(t, y).map_err(|e| PipelineError::new(Stage::Trends, e))?;
                state.insert(t.parameter_id.clone(), ms);
            }
            apply_theory(&model.theory, model, &state).map_err(|e| PipelineError::new(Stage::Theory, e))
        })
        .collect()
}

pub fn solve_actor(
    actor: &crate::model::ActorSpec,
    state: &DomainState,
    year: i32,
) -> Result<AttainmentResult, PipelineError> {
    let err = |e: crate::goal::GoalError| PipelineError::new(Stage::Actors, e);
    let gp = build_goal_program(actor, state, year).map_err(err)?;
    solve_goal_program(&gp).map_err(err)
}

pub fn solve_actors(model: &RegionModel, states: &[DomainState], years: &[i32]) -> Result<Vec<BTreeMap<String, f64>>, PipelineError> {
    states
        .iter()
        .zip(years)
        .map(|(state, &y)| {
            model.actors.iter().map(|a| Ok((a.id.clone(), solve_actor(a, state, y)?.attainment))).collect()
        })
        .collect()
}

pub fn aggregate_scenarios(per_scenario: &[(f64, f64)]) -> Result<f64, PipelineError> {
    if per_scenario.is_empty() {
        return Err(PipelineError::new(Stage::Inference, "no scenarios to aggregate"));
    }
    let mut wsum = 0.0;
    let mut acc = 0.0;
    for &(w, p) in per_scenario {
        if !(w > 0.0) {
            return Err(PipelineError::new(Stage::Inference, format!("scenario weight must be > 0, found {w}")));
        }
        wsum += w;
        acc += w * p;
    }
    Ok(acc / wsum)
}

struct TrendRoot {
    parameter: usize,
    threshold: f64,
    scale: f64,
    direction: Direction,
}

struct PreparedScenario {
    id: String,
    weight: f64,
    response: RootResponse,
    trend_roots: Vec<TrendRoot>,
}

fn inference_err(e: BbnError) -> PipelineError {
    PipelineError::new(Stage::Inference, e)
}

/// Mean and 90% interval of the mean, clamped to [0, 1].
pub fn mean_ci(values: &[f64]) -> (f64, (f64, f64)) {
    let (mean, sd) = mean_std(values);
    let mean = mean.clamp(0.0, 1.0);
    let half = Z90 * sd / sqrt(values.len() as f64);
    (mean, ((mean - half).clamp(0.0, mean), (mean + half).clamp(mean, 1.0)))
}

/// Monte Carlo over trend-mapped roots for one horizon year.
#[allow(clippy::too_many_arguments)]
pub fn simulate_year(
    model: &RegionModel,
    scenarios: &[ScenarioNetwork],
    state: &DomainState,
    attainments: &BTreeMap<String, f64>,
    year: i32,
    year_index: u32,
    seed: u64,
    samples: u32,
) -> Result<YearResult, PipelineError> {
    let mut sampled: BTreeSet<&str> = BTreeSet::new();
    for s in scenarios {
        for n in &s.nodes {
            if let Some(RootMapping::ParameterTrend { parameter_id, .. }) = &n.root_mapping {
                sampled.insert(parameter_id.as_str());
            }
        }
    }
    let sampled: Vec<&str> = sampled.into_iter().collect();
    let mut draws_spec = Vec::with_capacity(sampled.len());
    for id in &sampled {
        let &(mean, std) = state
            .get(*id)
            .ok_or_else(|| PipelineError::new(Stage::Inference, format!("root source '{id}' has no projected trend")))?;
        let b = model.parameter(id).and_then(|p| p.bounds.clone());
        draws_spec.push((mean, std, b.as_ref().and_then(|b| b.lower), b.as_ref().and_then(|b| b.upper)));
    }

    let mut prepared = Vec::with_capacity(scenarios.len());
    let mut root_priors = BTreeMap::new();
    for (si, s) in scenarios.iter().enumerate() {
        let mapped = bbn::map_roots(s, state, attainments).map_err(inference_err)?;
        let c = compile(&mapped).map_err(inference_err)?;
        if si == 0 {
            for (i, n) in mapped.nodes.iter().enumerate() {
                if n.parents.is_empty() {
                    root_priors.insert(n.id.clone(), c.root_prior(i));
                }
            }
        }
        let mut idx = Vec::new();
        let mut trend_roots = Vec::new();
        for (i, n) in mapped.nodes.iter().enumerate() {
            if let Some(RootMapping::ParameterTrend { parameter_id, threshold, scale, direction }) = &n.root_mapping {
                if c.card[i] != 2 {
                    return Err(PipelineError::new(Stage::Inference, format!("trend-mapped root '{}' must be binary", n.id)));
                }
                idx.push(i);
                trend_roots.push(TrendRoot {
                    parameter: sampled.iter().position(|p| p == parameter_id).unwrap_or(0),
                    threshold: *threshold,
                    scale: *scale,
                    direction: *direction,
                });
            }
        }
        if idx.len() > RootResponse::MAX_ROOTS {
            return Err(PipelineError::new(Stage::Inference, "too many trend-mapped roots"));
        }
        let response = RootResponse::new(&c, &idx).map_err(inference_err)?;
        prepared.push(PreparedScenario { id: s.id.clone(), weight: s.weight, response, trend_roots });
    }

    let n = samples as usize;
    let mut agg = Vec::with_capacity(n);
    let mut per_scenario = alloc::vec![0.0; prepared.len()];
    let mut values = alloc::vec![0.0; sampled.len()];
    let mut priors = Vec::new();
    let mut pairs = Vec::with_capacity(prepared.len());
    for i in 0..samples {
        let mut r = rng::stream(seed, year_index, i);
        for (v, &(mean, std, lo, hi)) in values.iter_mut().zip(&draws_spec) {
            *v = rng::truncated_normal(&mut r, mean, std, lo, hi);
        }
        pairs.clear();
        for (k, sc) in prepared.iter().enumerate() {
            priors.clear();
            priors.extend(sc.trend_roots.iter().map(|t| trend_probability(values[t.parameter], t.threshold, t.scale, t.direction)));
            let p = sc.response.eval(&priors);
            per_scenario[k] += p;
            pairs.push((sc.weight, p));
        }
        agg.push(aggregate_scenarios(&pairs)?);
    }
    let (mean, ci) = mean_ci(&agg);
    Ok(YearResult {
        year,
        p_intervention_mean: mean,
        p_intervention_ci: ci,
        scenario_probabilities: prepared.iter().zip(&per_scenario).map(|(s, t)| (s.id.clone(), t / n as f64)).collect(),
        samples_used: samples,
        attainments: attainments.clone(),
        root_priors,
    })
}

pub(crate) fn simulate_years(
    model: &RegionModel,
    config: &RunConfig,
    years: &[i32],
    states: &[DomainState],
    attainments: &[BTreeMap<String, f64>],
    exec: &dyn YearExecutor,
) -> Result<Vec<YearResult>, PipelineError> {
    let scenarios: Vec<ScenarioNetwork> = model.scenarios().cloned().collect();
    let job = |k: usize| {
        simulate_year(model, &scenarios, &states[k], &attainments[k], years[k], k as u32, config.seed, config.samples)
    };
    exec.map_years(years.len(), &job).into_iter().collect()
}

pub(crate) struct Parts {
    pub analysis: AnalysisOutput,
    pub trends: Vec<TrendModel>,
    pub per_year: Vec<YearResult>,
}

pub(crate) fn assemble(
    model: &RegionModel,
    config: &RunConfig,
    parts: Parts,
    parent: Option<&str>,
    edits: &[Edit],
) -> PipelineRun {
    let fingerprint = model_fingerprint(model);
    let attainments = parts.per_year.last().map(|y| y.attainments.clone()).unwrap_or_default();
    let mut ranking: Vec<(String, f64)> = attainments.iter().map(|(k, v)| (k.clone(), *v)).collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    PipelineRun {
        format: RUN_FORMAT.into(),
        run_id: derive_run_id(&fingerprint, config, parent, edits),
        parent_run_id: parent.map(ToString::to_string),
        edits: edits.to_vec(),
        engine_version: crate::VERSION.into(),
        model_fingerprint: fingerprint,
        region_name: model.region_name.clone(),
        theory: model.theory.clone(),
        seed: config.seed,
        config: config.clone(),
        horizon_years: parts.per_year.len() as u32,
        analysis: parts.analysis,
        trends: parts.trends,
        attainments,
        actor_ranking: ranking,
        per_year: parts.per_year,
        scenarios: model.scenarios().cloned().collect(),
        started_at: None,
        finished_at: None,
    }
}

pub fn run_pipeline(model: &RegionModel, config: &RunConfig) -> Result<PipelineRun, PipelineError> {
    run_pipeline_with(model, config, &Sequential)
}

pub fn run_pipeline_with(model: &RegionModel, config: &RunConfig, exec: &dyn YearExecutor) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    model.validate().map_err(|e| PipelineError::new(Stage::Config, e))?;
    let analysis = analyze(model, config)?;
    let trends = fit_trends(model, config)?;
    let years = horizon_years(model, config, &trends)?;
    let states = domain_states(model, &trends, &years)?;
    let attainments = solve_actors(model, &states, &years)?;
    let per_year = simulate_years(model, config, &years, &states, &attainments, exec)?;
    Ok(assemble(model, config, Parts { analysis, trends, per_year }, None, &[]))
}

/// Full attainment results for one horizon year, for reporting.
pub fn actor_results(model: &RegionModel, run: &PipelineRun, year: i32) -> Result<Vec<AttainmentResult>, PipelineError> {
    let years: Vec<i32> = run.per_year.iter().map(|y| y.year).collect();
    let k = years.iter().position(|&y| y == year).ok_or_else(|| PipelineError::new(Stage::Report, format!("year {year} not in run")))?;
    let states = domain_states(model, &run.trends, &years[k..=k])?;
    model.actors.iter().map(|a| solve_actor(a, &states[0], year)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub root: String,
    pub prior: f64,
    /// Range of P(intervention) over the sweep.
    pub swing: f64,
    pub sweep: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearDrivers {
    pub year: i32,
    pub drivers: Vec<Driver>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionReport {
    pub run_id: String,
    pub years: Vec<i32>,
    pub index_series: Vec<f64>,
    pub tripwire_threshold: f64,
    pub tripwire_years: Vec<i32>,
    pub top_drivers: Vec<YearDrivers>,
}

/// Primary scenario with root priors set as projected for `year`.
pub fn year_network(run: &PipelineRun, year: i32) -> Result<ScenarioNetwork, PipelineError> {
    let yr = run.year(year).ok_or_else(|| PipelineError::new(Stage::Report, format!("year {year} not in run")))?;
    let mut net = run
        .scenarios
        .first()
        .cloned()
        .ok_or_else(|| PipelineError::new(Stage::Report, "run has no scenario"))?;
    for node in net.nodes.iter_mut() {
        if let Some(&p) = yr.root_priors.get(&node.id) {
            bbn::set_row_prior(&mut node.cpt[0], p);
        }
    }
    Ok(net)
}

pub fn rank_drivers(net: &ScenarioNetwork) -> Result<Vec<Driver>, PipelineError> {
    let c = compile(net).map_err(|e| PipelineError::new(Stage::Report, e))?;
    let mut drivers = Vec::new();
    for (i, n) in net.nodes.iter().enumerate() {
        if !n.parents.is_empty() {
            continue;
        }
        let sweep = bbn::sensitivity_compiled(&c, &n.id, &DRIVER_DELTAS).map_err(|e| PipelineError::new(Stage::Report, e))?;
        let lo = sweep.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let hi = sweep.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        drivers.push(Driver { root: n.id.clone(), prior: c.root_prior(i), swing: hi - lo, sweep });
    }
    drivers.sort_by(|a, b| b.swing.total_cmp(&a.swing).then_with(|| a.root.cmp(&b.root)));
    Ok(drivers)
}

pub fn compute_intervention_index(run: &PipelineRun, tripwire: f64) -> Result<InterventionReport, PipelineError> {
    if !(0.0..=1.0).contains(&tripwire) {
        return Err(PipelineError::new(Stage::Report, format!("tripwire must lie in [0, 1], found {tripwire}")));
    }
    let years: Vec<i32> = run.per_year.iter().map(|y| y.year).collect();
    let index_series: Vec<f64> = run.per_year.iter().map(|y| y.p_intervention_mean).collect();
    let tripwire_years: Vec<i32> =
        run.per_year.iter().filter(|y| y.p_intervention_mean >= tripwire).map(|y| y.year).collect();
    let top_drivers = tripwire_years
        .iter()
        .map(|&y| Ok(YearDrivers { year: y, drivers: rank_drivers(&year_network(run, y)?)? }))
        .collect::<Result<_, PipelineError>>()?;
    Ok(InterventionReport {
        run_id: run.run_id.clone(),
        years,
        index_series,
        tripwire_threshold: tripwire,
        tripwire_years,
        top_drivers,
    })
}

pub fn rank_final_actors(model: &RegionModel, run: &PipelineRun) -> Result<Vec<(String, f64)>, PipelineError> {
    let y = run.final_year().ok_or_else(|| PipelineError::new(Stage::Report, "run has no years"))?.year;
    Ok(rank_actors(&actor_results(model, run, y)?))
}
