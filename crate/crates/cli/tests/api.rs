use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use healthgrid::{router, AppState, JobRecord, JobResult, JobStatus, RunRequest, ServiceConfig};
use healthgrid_core::scenarios::figure1_scenario;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(ServiceConfig {
        workers: 2,
        out_dir: None,
    }))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn wait(app: &Router, id: &str) -> JobRecord {
    let start = Instant::now();
    loop {
        let (status, bytes) = call(app, "GET", &format!("/api/runs/{id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        let record: JobRecord = serde_json::from_slice(&bytes).unwrap();
        if record.status.is_final() {
            return record;
        }
        assert!(start.elapsed() < Duration::from_secs(120), "job {id} never finished");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

async fn submit(app: &Router, uri: &str, body: Value) -> String {
    let (status, v) = call_json(app, "POST", uri, Some(body)).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{v}");
    v["job_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn health_and_builtins() {
    let app = app();
    let (status, v) = call_json(&app, "GET", "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    let (_, v) = call_json(&app, "GET", "/api/scenarios/builtin", None).await;
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|x| x["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"figure1"));
}

#[tokio::test]
async fn invalid_scenario_is_400_with_violations() {
    let app = app();
    let mut s = figure1_scenario();
    s.subregions[1].coords = (0, 0);
    s.fuels[2].hap_factor = -3.0;
    let (status, v) = call_json(&app, "POST", "/api/scenarios", Some(serde_json::to_value(&s).unwrap())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "invalid_scenario");
    let codes: Vec<&str> = v["violations"].as_array().unwrap().iter().map(|x| x["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"DuplicateCoords") && codes.contains(&"NegativeFactor"), "{codes:?}");
    assert!(v["message"].is_string());

    let (status, v) = call_json(&app, "POST", "/api/runs", Some(json!({"scenario": s, "T": 10}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn malformed_bodies_are_400() {
    let app = app();
    let (status, v) = call_json(&app, "POST", "/api/runs", Some(json!({"scenario": "figure1", "bogus": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "malformed_request");
    let (status, _) = call_json(&app, "POST", "/api/sweeps", Some(json!({"scenario": "figure1"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, v) = call_json(&app, "POST", "/api/runs", Some(json!({"scenario": "figure1", "T": 0}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "invalid_request");
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let app = app();
    for uri in ["/api/runs/job-404", "/api/runs/job-404/trajectory", "/api/sweeps/nope", "/api/scenarios/scn-9"] {
        let (status, v) = call_json(&app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(v["code"], "not_found");
    }
    let (status, _) = call_json(&app, "POST", "/api/runs", Some(json!({"scenario": "scn-77"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn run_matches_direct_execution() {
    let app = app();
    let body = json!({"scenario": "figure1", "policy_config": {"kind": "lyapunov", "V": 10}, "T": 300, "seed": 7});
    let id = submit(&app, "/api/runs", body.clone()).await;
    let record = wait(&app, &id).await;
    assert_eq!(record.status, JobStatus::Done);
    let Some(JobResult::Run(m)) = record.result else { panic!("no metrics") };
    let request: RunRequest = serde_json::from_value(body).unwrap();
    let direct = request.prepare(&|_| None).unwrap().run().unwrap();
    assert_eq!(*m, direct);

    // Idempotent reads.
    let (_, a) = call(&app, "GET", &format!("/api/runs/{id}"), None).await;
    let (_, b) = call(&app, "GET", &format!("/api/runs/{id}"), None).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn stored_scenarios_can_be_run() {
    let app = app();
    let (status, v) = call_json(
        &app,
        "POST",
        "/api/scenarios",
        Some(serde_json::from_str(include_str!("../../../docs/examples/two-cell.json")).unwrap()),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let sid = v["scenario_id"].as_str().unwrap().to_string();
    let (status, _) = call_json(&app, "GET", &format!("/api/scenarios/{sid}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let id = submit(&app, "/api/runs", json!({"scenario": sid, "T": 100})).await;
    assert_eq!(wait(&app, &id).await.status, JobStatus::Done);
}

#[tokio::test]
async fn trajectory_only_when_requested_and_done() {
    let app = app();
    let id = submit(&app, "/api/runs", json!({"scenario": "figure1", "T": 20000, "include_trajectory": true})).await;
    // A long job is still queued or running right after submission.
    let (status, v) = call_json(&app, "GET", &format!("/api/runs/{id}/trajectory"), None).await;
    if status != StatusCode::OK {
        assert_eq!(status, StatusCode::CONFLICT, "{v}");
        assert_eq!(v["code"], "not_done");
    }
    let record = wait(&app, &id).await;
    let Some(JobResult::Run(m)) = record.result else { panic!() };
    assert_eq!(m.trajectory.as_ref().unwrap().len(), 20000);
    let (status, body) = call(&app, "GET", &format!("/api/runs/{id}/trajectory"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body.iter().filter(|&&b| b == b'\n').count(), 20000);

    let plain = submit(&app, "/api/runs", json!({"scenario": "figure1", "T": 10})).await;
    wait(&app, &plain).await;
    let (status, _) = call(&app, "GET", &format!("/api/runs/{plain}/trajectory"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sweeps_return_one_row_per_value() {
    let app = app();
    let id = submit(
        &app,
        "/api/sweeps",
        json!({"scenario": "figure1", "axis": "cap_co2", "values": [30, 35, 40], "T": 200}),
    )
    .await;
    let record = wait(&app, &id).await;
    let Some(JobResult::Sweep(points)) = record.result else { panic!("{record:?}") };
    assert_eq!(points.iter().map(|p| p.value).collect::<Vec<_>>(), [30.0, 35.0, 40.0]);
    let (status, _) = call(&app, "GET", &format!("/api/sweeps/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn failed_job_leaves_others_intact() {
    let app = app();
    let good = submit(&app, "/api/runs", json!({"scenario": "figure1", "T": 100})).await;
    // The oracle's size limit is only hit when the job builds its controller.
    let bad = submit(
        &app,
        "/api/runs",
        json!({"scenario": "oracle-testbed", "policy_config": {"kind": "oracle_fixed", "oracle_resolution": 0.01}, "T": 10}),
    )
    .await;
    let failed = wait(&app, &bad).await;
    assert_eq!(failed.status, JobStatus::Failed);
    assert!(failed.error.as_deref().unwrap().contains("candidates"));
    let ok = wait(&app, &good).await;
    assert_eq!(ok.status, JobStatus::Done);
    let again = wait(&app, &good).await;
    assert_eq!(ok, again);
}

#[tokio::test]
async fn concurrent_submissions_all_finish() {
    let app = app();
    let mut ids = Vec::new();
    for seed in 0..8 {
        ids.push(submit(&app, "/api/runs", json!({"scenario": "figure1", "T": 200, "seed": seed})).await);
    }
    for id in ids {
        assert_eq!(wait(&app, &id).await.status, JobStatus::Done);
    }
}

#[tokio::test]
async fn write_through_to_directory() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(ServiceConfig {
        workers: 1,
        out_dir: Some(dir.path().to_path_buf()),
    }));
    let id = submit(&app, "/api/runs", json!({"scenario": "figure1", "T": 10})).await;
    let record = wait(&app, &id).await;
    let path = dir.path().join(format!("{id}.json"));
    let start = Instant::now();
    while !path.exists() && start.elapsed() < Duration::from_secs(10) {
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    let stored: JobRecord = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(stored, record);
}
