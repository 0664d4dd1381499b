//! HTTP front end for audit and repair over one dataset loaded at startup.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fairtopk::app::{eps_from_f64, run_audit, run_repair, Algorithm, RepairOptions, Report};
use fairtopk::model::{Dataset, FairnessSpec, WeightBox, WeightVector};
use fairtopk::Control;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

/// The dataset served by one process.
#[derive(Debug)]
pub struct Loaded {
    pub dataset: Dataset,
    pub column_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Cancelled,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JobView {
    pub id: u64,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ApiError>,
}

struct Job {
    view: JobView,
    control: Control,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    loaded: Option<Loaded>,
    jobs: Mutex<HashMap<u64, Job>>,
    next_id: AtomicU64,
    // one repair at a time keeps timings free of interference
    repair_slot: Semaphore,
}

impl AppState {
    pub fn new(loaded: Option<Loaded>) -> Self {
        Self {
            inner: Arc::new(Inner {
                loaded,
                jobs: Mutex::new(HashMap::new()),
                next_id: AtomicU64::new(1),
                repair_slot: Semaphore::new(1),
            }),
        }
    }

    fn dataset(&self) -> Result<&Loaded, ApiError> {
        self.inner.loaded.as_ref().ok_or_else(|| ApiError {
            status: StatusCode::CONFLICT,
            reason: "no_dataset".into(),
            message: "no dataset is loaded".into(),
        })
    }

    fn update(&self, id: u64, f: impl FnOnce(&mut JobView)) {
        if let Some(job) = self.inner.jobs.lock().expect("jobs lock").get_mut(&id) {
            f(&mut job.view);
        }
    }

    fn status(&self, id: u64) -> Option<JobStatus> {
        self.inner.jobs.lock().expect("jobs lock").get(&id).map(|j| j.view.status)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/dataset", get(dataset))
        .route("/v1/audit", post(audit))
        .route("/v1/repair", post(repair))
        .route("/v1/jobs/{id}", get(job).delete(cancel_job))
        .with_state(state)
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    reason: String,
    message: String,
}

impl ApiError {
    fn bad_request(reason: &str, message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, reason: reason.into(), message: message.into() }
    }
}

impl From<fairtopk::Error> for ApiError {
    fn from(e: fairtopk::Error) -> Self {
        let status = if e.is_input_error() { StatusCode::BAD_REQUEST } else { StatusCode::INTERNAL_SERVER_ERROR };
        Self { status, reason: e.code().into(), message: e.to_string() }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request("malformed_body", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "reason": self.reason, "message": self.message }))).into_response()
    }
}

async fn dataset(State(state): State<AppState>) -> Result<Json<serde_json::Value>, ApiError> {
    let loaded = state.dataset()?;
    let ds = &loaded.dataset;
    Ok(Json(json!({
        "n": ds.n(),
        "d": ds.dim(),
        "groups": ds.groups(),
        "protectedShare": ds.protected_share(),
        "columnNames": loaded.column_names,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRequest {
    pub w: Vec<f64>,
    pub k: usize,
    pub lower: usize,
    pub upper: usize,
}

fn weight(ds: &Dataset, w: &[f64], name: &str) -> Result<WeightVector, ApiError> {
    if w.len() != ds.dim() {
        return Err(ApiError::bad_request(
            "dimension_mismatch",
            format!("{name} has {} components, dataset has {} attributes", w.len(), ds.dim()),
        ));
    }
    WeightVector::from_f64s(w).map_err(|e| ApiError::bad_request("invalid_weight", e.to_string()))
}

fn spec(ds: &Dataset, k: usize, lower: usize, upper: usize) -> Result<FairnessSpec, ApiError> {
    let spec = FairnessSpec::new(k, lower, upper)?;
    spec.validate_for(ds)?;
    Ok(spec)
}

async fn audit(State(state): State<AppState>, body: Result<Json<AuditRequest>, JsonRejection>) -> Result<Json<Report>, ApiError> {
    let ds = &state.dataset()?.dataset;
    let Json(req) = body?;
    let w = weight(ds, &req.w, "w")?;
    let spec = spec(ds, req.k, req.lower, req.upper)?;
    Ok(Json(run_audit(ds, &w, &spec)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RepairRequest {
    pub w0: Vec<f64>,
    pub eps: f64,
    pub k: usize,
    pub lower: usize,
    pub upper: usize,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub time_limit: Option<f64>,
}

async fn repair(State(state): State<AppState>, body: Result<Json<RepairRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let ds = &state.dataset()?.dataset;
    let Json(req) = body?;
    let w0 = weight(ds, &req.w0, "w0")?;
    let eps = eps_from_f64(req.eps)?;
    let spec = spec(ds, req.k, req.lower, req.upper)?;
    let algorithm = req.algorithm.unwrap_or(if ds.dim() == 2 { Algorithm::Sweep2d } else { Algorithm::KlevelHd });
    if algorithm == Algorithm::Sweep2d && ds.dim() != 2 {
        return Err(fairtopk::Error::UnsupportedDimension { dim: ds.dim(), reason: "sweep2d handles two scoring attributes only" }.into());
    }
    let workers = req.workers.unwrap_or(1);
    if workers == 0 {
        return Err(ApiError::bad_request("invalid_parameter", "workers must be positive"));
    }
    let time_limit = match req.time_limit {
        Some(s) if !(s > 0.0 && s.is_finite()) => return Err(ApiError::bad_request("invalid_parameter", "timeLimit must be positive")),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    // reject empty boxes up front rather than in the job
    WeightBox::from_epsilon_box(&w0, &eps)?;
    let opts = RepairOptions { algorithm, workers, seed: req.seed.unwrap_or(0), budget: req.budget, time_limit, skyband: true };

    let id = state.inner.next_id.fetch_add(1, Ordering::SeqCst);
    let control = Control::new();
    let view = JobView { id, status: JobStatus::Queued, result: None, error: None };
    state.inner.jobs.lock().expect("jobs lock").insert(id, Job { view: view.clone(), control: control.clone() });
    tokio::spawn(run_job(state.clone(), id, w0, eps, spec, opts, control));
    Ok((StatusCode::ACCEPTED, Json(view)).into_response())
}

async fn run_job(
    state: AppState,
    id: u64,
    w0: WeightVector,
    eps: fairtopk::rational::Q,
    spec: FairnessSpec,
    opts: RepairOptions,
    control: Control,
) {
    let _permit = state.inner.repair_slot.acquire().await.expect("semaphore never closes");
    if state.status(id) != Some(JobStatus::Queued) {
        return;
    }
    state.update(id, |v| v.status = JobStatus::Running);
    let worker_state = state.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let ds = &worker_state.dataset().expect("checked before queueing").dataset;
        run_repair(ds, &w0, &eps, &spec, &opts, &control)
    })
    .await;
    state.update(id, |v| match outcome {
        Ok(Ok(report)) => {
            v.status = JobStatus::Done;
            v.result = Some(report);
        }
        Ok(Err(fairtopk::Error::Cancelled)) => v.status = JobStatus::Cancelled,
        Ok(Err(e)) => {
            v.status = JobStatus::Failed;
            v.error = Some(e.into());
        }
        Err(join) => {
            v.status = JobStatus::Failed;
            v.error = Some(ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                reason: "panic".into(),
                message: join.to_string(),
            });
        }
    });
}

fn not_found(id: u64) -> ApiError {
    ApiError { status: StatusCode::NOT_FOUND, reason: "unknown_job".into(), message: format!("no job {id}") }
}

async fn job(State(state): State<AppState>, Path(id): Path<u64>) -> Result<Json<JobView>, ApiError> {
    let jobs = state.inner.jobs.lock().expect("jobs lock");
    jobs.get(&id).map(|j| Json(j.view.clone())).ok_or_else(|| not_found(id))
}

async fn cancel_job(State(state): State<AppState>, Path(id): Path<u64>) -> Result<Json<JobView>, ApiError> {
    let mut jobs = state.inner.jobs.lock().expect("jobs lock");
    let job = jobs.get_mut(&id).ok_or_else(|| not_found(id))?;
    job.control.cancel();
    if job.view.status == JobStatus::Queued {
        job.view.status = JobStatus::Cancelled;
    }
    Ok(Json(job.view.clone()))
}
