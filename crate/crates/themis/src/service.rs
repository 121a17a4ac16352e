//! HTTP facade over the engine: models, runs, what-if edits and reports.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use themis_core::bbn::{self, BbnError};
use themis_core::scenario::{self, model_fingerprint, PipelineError, Stage};
use themis_core::whatif::{what_if, Edit, WhatIfError};
use themis_core::{PipelineRun, RegionModel, RunConfig};
use tower_http::cors::CorsLayer;

use crate::exec::RayonExecutor;

pub const DEFAULT_MAX_SAMPLES: u32 = 10_000;
pub const DEFAULT_SWEEP_POINTS: usize = 11;

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub path: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl ToString, path: impl ToString) -> Self {
        Self { status, code, message: message.to_string(), path: path.to_string(), details: Vec::new() }
    }

    fn not_found(code: &'static str, what: &str, path: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, format!("unknown {what}"), path)
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, "")
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let code = if e.stage == Stage::Config { "invalid_config" } else { "pipeline_failed" };
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string(), e.stage.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Decodes a JSON body; syntax errors are 400, shape errors 422.
fn decode<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", inner, path)
        } else {
            ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", inner, path)
        }
    })
}

#[derive(Clone)]
struct StoredRun {
    model_id: String,
    run: Arc<PipelineRun>,
}

#[derive(Default)]
struct Store {
    models: BTreeMap<String, Arc<RegionModel>>,
    runs: BTreeMap<String, StoredRun>,
}

pub struct AppState {
    store: RwLock<Store>,
    max_samples: u32,
    data_dir: Option<PathBuf>,
    exec: RayonExecutor,
}

impl AppState {
    pub fn new(max_samples: u32, data_dir: Option<PathBuf>, threads: Option<usize>) -> anyhow::Result<Self> {
        if let Some(d) = &data_dir {
            std::fs::create_dir_all(d.join("runs"))?;
        }
        Ok(Self { store: RwLock::default(), max_samples, data_dir, exec: RayonExecutor::new(threads)? })
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(|p| p.into_inner())
    }

    fn model(&self, id: &str) -> ApiResult<Arc<RegionModel>> {
        self.read().models.get(id).cloned().ok_or_else(|| ApiError::not_found("model_not_found", "model id", "model_id"))
    }

    fn run(&self, id: &str) -> ApiResult<StoredRun> {
        self.read().runs.get(id).cloned().ok_or_else(|| ApiError::not_found("run_not_found", "run id", "id"))
    }

    fn insert_model(&self, model: RegionModel) -> String {
        let id = model_id(&model);
        self.write().models.entry(id.clone()).or_insert_with(|| Arc::new(model));
        id
    }

    fn insert_run(&self, model_id: String, run: PipelineRun) -> ApiResult<Arc<PipelineRun>> {
        if let Some(dir) = &self.data_dir {
            crate::io::save_run(&dir.join("runs").join(format!("{}.json", run.run_id)), &run)
                .map_err(ApiError::internal)?;
        }
        let run = Arc::new(run);
        self.write().runs.insert(run.run_id.clone(), StoredRun { model_id, run: run.clone() });
        Ok(run)
    }
}

/// Content-derived, so re-posting a model yields the same id.
pub fn model_id(model: &RegionModel) -> String {
    let fp = model_fingerprint(model);
    format!("model-{}", &fp["sha256:".len()..][..12])
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": themis_core::VERSION }))
}

#[derive(Serialize)]
struct ModelSummary {
    model_id: String,
    region_name: String,
    fingerprint: String,
    parameters: usize,
    actors: usize,
    horizon_years: u32,
}

fn summary(id: &str, m: &RegionModel) -> ModelSummary {
    ModelSummary {
        model_id: id.to_string(),
        region_name: m.region_name.clone(),
        fingerprint: model_fingerprint(m),
        parameters: m.parameters.len(),
        actors: m.actors.len(),
        horizon_years: m.horizon_years,
    }
}

async fn list_models(State(s): State<Arc<AppState>>) -> Json<Vec<ModelSummary>> {
    Json(s.read().models.iter().map(|(id, m)| summary(id, m)).collect())
}

async fn post_model(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<ModelSummary>)> {
    let model: RegionModel = decode(&body)?;
    if let Err(errs) = model.validate() {
        let first = &errs.0[0];
        let mut e = ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "validation_failed",
            format!("{} ({} issue(s))", first.message, errs.0.len()),
            &first.path,
        );
        e.details = errs.0.iter().map(|i| json!({ "path": i.path, "message": i.message })).collect();
        return Err(e);
    }
    let id = s.insert_model(model);
    let m = s.model(&id)?;
    Ok((StatusCode::CREATED, Json(summary(&id, &m))))
}

async fn get_model(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Arc<RegionModel>>> {
    Ok(Json(s.model(&id)?))
}

#[derive(Deserialize)]
struct RunRequest {
    model_id: String,
    #[serde(default)]
    config: RunConfig,
}

async fn post_run(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Arc<PipelineRun>>> {
    let req: RunRequest = decode(&body)?;
    let model = s.model(&req.model_id)?;
    if req.config.samples > s.max_samples {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "sample_cap_exceeded",
            format!("samples {} exceed the service cap of {}; use the CLI for larger runs", req.config.samples, s.max_samples),
            "config.samples",
        ));
    }
    let st = s.clone();
    let started = now();
    let mut run = blocking(move || scenario::run_pipeline_with(&model, &req.config, &st.exec)).await??;
    run.started_at = Some(started);
    run.finished_at = Some(now());
    Ok(Json(s.insert_run(req.model_id, run)?))
}

#[derive(Serialize)]
struct RunSummary {
    run_id: String,
    parent_run_id: Option<String>,
    model_id: String,
    region_name: String,
    seed: u64,
    final_index: Option<f64>,
}

async fn list_runs(State(s): State<Arc<AppState>>) -> Json<Vec<RunSummary>> {
    Json(
        s.read()
            .runs
            .values()
            .map(|r| RunSummary {
                run_id: r.run.run_id.clone(),
                parent_run_id: r.run.parent_run_id.clone(),
                model_id: r.model_id.clone(),
                region_name: r.run.region_name.clone(),
                seed: r.run.seed,
                final_index: r.run.final_year().map(|y| y.p_intervention_mean),
            })
            .collect(),
    )
}

async fn get_run(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Arc<PipelineRun>>> {
    Ok(Json(s.run(&id)?.run))
}

#[derive(Deserialize)]
struct WhatIfRequest {
    #[serde(default)]
    edits: Vec<Edit>,
}

async fn post_whatif(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Arc<PipelineRun>>> {
    let parent = s.run(&id)?;
    let req: WhatIfRequest = decode(&body)?;
    let model = s.model(&parent.model_id)?;
    let st = s.clone();
    let parent_run = parent.run.clone();
    let started = now();
    let (child_model, mut child) = blocking(move || what_if(&model, &parent_run, &req.edits, &st.exec))
        .await?
        .map_err(|e| match e {
            WhatIfError::BadEdit { index, message } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_edit", message, format!("edits[{index}]"))
            }
            WhatIfError::Pipeline(p) => p.into(),
            other => ApiError::internal(other),
        })?;
    child.started_at = Some(started);
    child.finished_at = Some(now());
    let child_id = s.insert_model(child_model);
    Ok(Json(s.insert_run(child_id, child)?))
}

#[derive(Deserialize)]
struct ReportQuery {
    tripwire: Option<f64>,
}

async fn get_report(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> ApiResult<Json<scenario::InterventionReport>> {
    let r = s.run(&id)?.run;
    let tripwire = q.tripwire.unwrap_or(r.config.tripwire);
    let report = blocking(move || scenario::compute_intervention_index(&r, tripwire))
        .await?
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_tripwire", e.message, "tripwire"))?;
    Ok(Json(report))
}

#[derive(Deserialize)]
struct YearQuery {
    year: Option<i32>,
    points: Option<usize>,
}

fn pick_year(run: &PipelineRun, year: Option<i32>) -> ApiResult<i32> {
    match year {
        Some(y) if run.year(y).is_some() => Ok(y),
        Some(y) => Err(ApiError::new(StatusCode::NOT_FOUND, "year_not_found", format!("year {y} is not in the run"), "year")),
        None => run.final_year().map(|y| y.year).ok_or_else(|| ApiError::internal("run has no years")),
    }
}

fn year_net(run: &PipelineRun, year: i32) -> ApiResult<bbn::ScenarioNetwork> {
    scenario::year_network(run, year).map_err(ApiError::internal)
}

async fn get_sensitivity(
    State(s): State<Arc<AppState>>,
    Path((id, root)): Path<(String, String)>,
    Query(q): Query<YearQuery>,
) -> ApiResult<Json<Value>> {
    let run = s.run(&id)?.run;
    let year = pick_year(&run, q.year)?;
    let points = q.points.unwrap_or(DEFAULT_SWEEP_POINTS);
    if !(2..=101).contains(&points) {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_points", "points must lie in [2, 101]", "points"));
    }
    let net = year_net(&run, year)?;
    let baseline = net
        .node(&root)
        .ok_or_else(|| ApiError::not_found("node_not_found", "node", "root"))?
        .cpt[0][0];
    let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let pairs = bbn::sweep(&net, &root, &grid).map_err(|e| match e {
        BbnError::NotRoot(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "not_a_root", e, "root"),
        other => ApiError::internal(other),
    })?;
    Ok(Json(json!({ "run_id": run.run_id, "root": root, "year": year, "baseline_prior": baseline, "pairs": pairs })))
}

async fn get_network(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<YearQuery>,
) -> ApiResult<Json<Value>> {
    let run = s.run(&id)?.run;
    let year = pick_year(&run, q.year)?;
    let net = year_net(&run, year)?;
    let c = bbn::compile(&net).map_err(ApiError::internal)?;
    let mut marginals = BTreeMap::new();
    for n in &net.nodes {
        let p = bbn::infer_compiled(&c, &n.id, &BTreeMap::new(), &bbn::Elimination::MinDegree).map_err(ApiError::internal)?;
        marginals.insert(n.id.clone(), p.marginal);
    }
    Ok(Json(json!({ "run_id": run.run_id, "year": year, "network": net, "marginals": marginals })))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "route_not_found", "no such endpoint", "")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/models", get(list_models).post(post_model))
        .route("/api/models/{id}", get(get_model))
        .route("/api/runs", get(list_runs).post(post_run))
        .route("/api/runs/{id}", get(get_run))
        .route("/api/runs/{id}/whatif", post(post_whatif))
        .route("/api/runs/{id}/report", get(get_report))
        .route("/api/runs/{id}/sensitivity/{root}", get(get_sensitivity))
        .route("/api/runs/{id}/network", get(get_network))
        .fallback(fallback)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
