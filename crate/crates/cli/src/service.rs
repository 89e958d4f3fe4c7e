//! HTTP service: scenarios, asynchronous run and sweep jobs.
//!
//! Jobs are submitted with POST and polled with GET. A semaphore bounds the
//! number of simulations executing at once; each runs on the blocking pool
//! and owns its state. Finished records can be written through to a
//! directory as `<job_id>.json`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use healthgrid_core::grid::{validate_scenario, Scenario};
use healthgrid_core::scenarios::{builtin, BUILTIN_NAMES};
use healthgrid_core::sim::trajectory_jsonl;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use tokio::sync::Semaphore;

use crate::error::{AppError, ErrorKind};
use crate::jobs::{JobKind, JobResult, JobStatus, JobStore};
use crate::request::{RunRequest, SweepRequest};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Simulations allowed to execute concurrently.
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(2, |n| n.get()),
            out_dir: None,
        }
    }
}

pub struct AppState {
    jobs: JobStore,
    scenarios: RwLock<HashMap<String, Scenario>>,
    next_scenario: AtomicU64,
    permits: Arc<Semaphore>,
    out_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            jobs: JobStore::new(),
            scenarios: RwLock::new(HashMap::new()),
            next_scenario: AtomicU64::new(0),
            permits: Arc::new(Semaphore::new(config.workers.max(1))),
            out_dir: config.out_dir,
        })
    }

    pub fn jobs(&self) -> &JobStore {
        &self.jobs
    }

    fn stored(&self, id: &str) -> Option<Scenario> {
        self.scenarios.read().expect("scenario store poisoned").get(id).cloned()
    }

    fn write_through(&self, id: &str) {
        let (Some(dir), Some(record)) = (&self.out_dir, self.jobs.get(id)) else {
            return;
        };
        let path = dir.join(format!("{id}.json"));
        let result = serde_json::to_vec(&*record)
            .map_err(std::io::Error::other)
            .and_then(|bytes| std::fs::write(&path, bytes));
        if let Err(e) = result {
            log::warn!("could not write {}: {e}", path.display());
        }
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::Invalid => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::NotDone => StatusCode::CONFLICT,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(self)).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, AppError> {
    serde_json::from_slice(body).map_err(|e| AppError::invalid("malformed_request", e.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/scenarios", post(create_scenario))
        .route("/api/scenarios/builtin", get(list_builtins))
        .route("/api/scenarios/{id}", get(get_scenario))
        .route("/api/runs", post(submit_run))
        .route("/api/runs/{id}", get(get_job))
        .route("/api/runs/{id}/trajectory", get(get_trajectory))
        .route("/api/sweeps", post(submit_sweep))
        .route("/api/sweeps/{id}", get(get_job))
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "jobs": state.jobs.len(),
    }))
}

#[derive(Serialize)]
struct NamedScenario {
    name: &'static str,
    scenario: Scenario,
}

async fn list_builtins() -> Json<Vec<NamedScenario>> {
    Json(
        BUILTIN_NAMES
            .iter()
            .map(|&name| NamedScenario {
                name,
                scenario: builtin(name).expect("listed built-in exists"),
            })
            .collect(),
    )
}

async fn create_scenario(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, AppError> {
    let raw: Scenario = parse(&body)?;
    let scenario = validate_scenario(raw)?;
    let id = format!("scn-{}", state.next_scenario.fetch_add(1, Ordering::Relaxed) + 1);
    state
        .scenarios
        .write()
        .expect("scenario store poisoned")
        .insert(id.clone(), scenario.clone());
    Ok((StatusCode::CREATED, Json(json!({ "scenario_id": id, "scenario": scenario }))).into_response())
}

async fn get_scenario(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Scenario>, AppError> {
    state
        .stored(&id)
        .or_else(|| builtin(&id))
        .map(Json)
        .ok_or_else(|| AppError::not_found(format!("no scenario '{id}'")))
}

fn spawn_job<F>(state: &Arc<AppState>, kind: JobKind, work: F) -> Response
where
    F: FnOnce() -> Result<JobResult, AppError> + Send + 'static,
{
    let id = state.jobs.create(kind);
    let task_state = Arc::clone(state);
    let task_id = id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = Arc::clone(&task_state.permits).acquire_owned().await else {
            return;
        };
        task_state.jobs.start(&task_id);
        let outcome = match tokio::task::spawn_blocking(work).await {
            Ok(Ok(result)) => Ok(result),
            Ok(Err(e)) => Err(e.to_string()),
            Err(e) => Err(format!("job panicked: {e}")),
        };
        if let Err(e) = &outcome {
            log::warn!("{task_id} failed: {e}");
        }
        task_state.jobs.finish(&task_id, outcome);
        task_state.write_through(&task_id);
    });
    (StatusCode::ACCEPTED, Json(json!({ "job_id": id, "status": JobStatus::Queued }))).into_response()
}

async fn submit_run(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, AppError> {
    let request: RunRequest = parse(&body)?;
    let prepared = request.prepare(&|id| state.stored(id))?;
    Ok(spawn_job(&state, JobKind::Run, move || {
        prepared.run().map(|m| JobResult::Run(Box::new(m)))
    }))
}

async fn submit_sweep(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, AppError> {
    let request: SweepRequest = parse(&body)?;
    let prepared = request.prepare(&|id| state.stored(id))?;
    Ok(spawn_job(&state, JobKind::Sweep, move || prepared.run().map(JobResult::Sweep)))
}

async fn get_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, AppError> {
    let record = state.jobs.get(&id).ok_or_else(|| AppError::not_found(format!("no job '{id}'")))?;
    Ok(Json(&*record).into_response())
}

/// The run's trajectory as JSON Lines, byte-identical to the CLI export.
async fn get_trajectory(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, AppError> {
    let record = state.jobs.get(&id).ok_or_else(|| AppError::not_found(format!("no job '{id}'")))?;
    if record.status != JobStatus::Done {
        return Err(AppError::new(
            ErrorKind::NotDone,
            "not_done",
            format!("job '{id}' is {:?}", record.status),
        ));
    }
    let trajectory = match &record.result {
        Some(JobResult::Run(m)) => m.trajectory.as_ref(),
        _ => None,
    }
    .ok_or_else(|| AppError::not_found(format!("job '{id}' has no recorded trajectory")))?;
    let body = trajectory_jsonl(trajectory);
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
