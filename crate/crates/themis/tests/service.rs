use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use themis::service::{router, AppState};
use themis_core::synth;
use tower::ServiceExt;

fn app() -> axum::Router {
    router(Arc::new(AppState::new(10_000, None, Some(2)).unwrap()))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn post_model(app: &axum::Router) -> String {
    let (s, v) = call(app, "POST", "/api/models", Some(serde_json::to_string(&synth::country_x_model()).unwrap())).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["model_id"].as_str().unwrap().to_string()
}

async fn post_run(app: &axum::Router, model_id: &str, samples: u32) -> Value {
    let body = json!({ "model_id": model_id, "config": { "seed": 42, "samples": samples } });
    let (s, v) = call(app, "POST", "/api/runs", Some(body.to_string())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v
}

fn numerics(v: &Value) -> Value {
    let mut v = v.clone();
    for k in ["run_id", "parent_run_id", "edits", "started_at", "finished_at"] {
        v.as_object_mut().unwrap().remove(k);
    }
    v
}

#[tokio::test]
async fn health_and_model_listing() {
    let app = app();
    let (s, v) = call(&app, "GET", "/api/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["version"], themis_core::VERSION);
    let id = post_model(&app).await;
    let (_, list) = call(&app, "GET", "/api/models", None).await;
    assert_eq!(list[0]["model_id"], id.as_str());
    assert_eq!(list[0]["parameters"], 25);
    let (s, m) = call(&app, "GET", &format!("/api/models/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["region_name"], "Country X");
}

#[tokio::test]
async fn errors_use_the_envelope() {
    let app = app();
    let mut bad = synth::country_x_model();
    bad.actors[0].goals[1].expression_coefficients.insert("gdp2".into(), 1.0);
    let (s, v) = call(&app, "POST", "/api/models", Some(serde_json::to_string(&bad).unwrap())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "validation_failed");
    assert_eq!(v["path"], "actors[0].goals[1].expression_coefficients.gdp2");
    let (s, v) = call(&app, "POST", "/api/models", Some("{not json".into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "malformed_json");
    let (s, v) = call(&app, "POST", "/api/runs", Some(json!({ "model_id": "nope" }).to_string())).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "model_not_found");
    assert!(v["message"].is_string() && v["path"].is_string());
    let (s, v) = call(&app, "GET", "/api/runs/run-missing", None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("run_not_found")));
    let (s, v) = call(&app, "POST", "/api/runs/run-missing/whatif", Some("{\"edits\": []}".into())).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("run_not_found")));
    let (s, _) = call(&app, "GET", "/api/nowhere", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn config_errors_and_sample_cap() {
    let app = app();
    let id = post_model(&app).await;
    let body = json!({ "model_id": id, "config": { "samples": 20_000 } });
    let (s, v) = call(&app, "POST", "/api/runs", Some(body.to_string())).await;
    assert_eq!((s, v["code"].as_str(), v["path"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("sample_cap_exceeded"), Some("config.samples")));
    let body = json!({ "model_id": id, "config": { "tripwire": 3.0 } });
    let (s, v) = call(&app, "POST", "/api/runs", Some(body.to_string())).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_config")));
}

#[tokio::test]
async fn runs_are_reproducible_and_whatif_is_lineaged() {
    let app = app();
    let id = post_model(&app).await;
    let a = post_run(&app, &id, 200).await;
    let b = post_run(&app, &id, 200).await;
    assert_eq!(numerics(&a), numerics(&b));
    let run_id = a["run_id"].as_str().unwrap();
    let (s, got) = call(&app, "GET", &format!("/api/runs/{run_id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(numerics(&got), numerics(&a));

    let (s, child) = call(&app, "POST", &format!("/api/runs/{run_id}/whatif"), Some("{\"edits\": []}".into())).await;
    assert_eq!(s, StatusCode::OK, "{child}");
    assert_eq!(child["parent_run_id"], run_id);
    let child_id = child["run_id"].as_str().unwrap();
    let (_, ra) = call(&app, "GET", &format!("/api/runs/{run_id}/report?tripwire=0.6"), None).await;
    let (_, rb) = call(&app, "GET", &format!("/api/runs/{child_id}/report?tripwire=0.6"), None).await;
    for k in ["years", "index_series", "tripwire_years", "top_drivers", "tripwire_threshold"] {
        assert_eq!(ra[k], rb[k], "{k}");
    }

    let edits = json!({ "edits": [{ "kind": "remove_actor", "actor_id": "nobody" }] });
    let (s, v) = call(&app, "POST", &format!("/api/runs/{run_id}/whatif"), Some(edits.to_string())).await;
    assert_eq!((s, v["code"].as_str(), v["path"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_edit"), Some("edits[0]")));
    let edits = json!({ "edits": [{ "kind": "set_theory", "theory": "bernstein_four_factor" }] });
    let (s, v) = call(&app, "POST", &format!("/api/runs/{run_id}/whatif"), Some(edits.to_string())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (s, v) = call(&app, "GET", &format!("/api/runs/{run_id}/report?tripwire=1.5"), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_tripwire")));
    let (_, runs) = call(&app, "GET", "/api/runs", None).await;
    assert_eq!(runs.as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn sensitivity_and_network_views() {
    let app = app();
    let id = post_model(&app).await;
    let run = post_run(&app, &id, 50).await;
    let run_id = run["run_id"].as_str().unwrap();
    let (s, v) = call(&app, "GET", &format!("/api/runs/{run_id}/sensitivity/religious_dogmatism"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let pairs = v["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 11);
    assert_eq!(pairs[0][0], 0.0);
    assert_eq!(pairs[10][0], 1.0);
    let (s, v) = call(&app, "GET", &format!("/api/runs/{run_id}/sensitivity/civil_unrest"), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("not_a_root")));
    let (s, _) = call(&app, "GET", &format!("/api/runs/{run_id}/sensitivity/nothing"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let year = run["per_year"][0]["year"].as_i64().unwrap();
    let (s, v) = call(&app, "GET", &format!("/api/runs/{run_id}/network?year={year}"), None).await;
    assert_eq!(s, StatusCode::OK);
    let m = v["marginals"]["intervention"].as_array().unwrap();
    assert!((m[0].as_f64().unwrap() + m[1].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let (s, _) = call(&app, "GET", &format!("/api/runs/{run_id}/network?year=1900"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}
