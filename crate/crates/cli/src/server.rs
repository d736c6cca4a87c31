//! HTTP API consumed by the operator console.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Json, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde_json::{json, Value};

use nlfw_core::context::{context_to_value, load_context, ContextError, ContextStore, StoreError};
use nlfw_core::intent::AgentClient;
use nlfw_core::pipeline::{run_pipeline, AuditLog, Backend, RunOptions};
use nlfw_core::Finding;

pub struct AppState {
    pub store: ContextStore,
    pub audit: Option<AuditLog>,
    pub agent: Option<Arc<dyn AgentClient>>,
}

impl AppState {
    pub fn new(store: ContextStore, audit: Option<AuditLog>, agent: Option<Arc<dyn AgentClient>>) -> Arc<AppState> {
        Arc::new(AppState { store, audit, agent })
    }
}

/// Error body: `{code, message, findings}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    findings: Vec<Finding>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError { status, code: code.into(), message: message.into(), findings: Vec::new() }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "REQUEST_INVALID", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        let status = match e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<ContextError> for ApiError {
    fn from(e: ContextError) -> ApiError {
        let code = match e {
            ContextError::Syntax(_) => "CTX_SYNTAX",
            ContextError::Invalid(_) => "CTX_SCHEMA",
        };
        let findings = e.findings();
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: code.into(),
            message: format!("context rejected with {} finding(s)", findings.len()),
            findings,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "findings": self.findings });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn add_context(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let ctx = load_context(&body)?;
    let id = tokio::task::spawn_blocking(move || st.store.save(&ctx))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))??;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

async fn list_contexts(State(st): State<Arc<AppState>>) -> ApiResult {
    Ok(Json(st.store.list()?).into_response())
}

async fn get_context(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    Ok(Json(context_to_value(&st.store.get(&id)?)).into_response())
}

#[derive(Debug, Deserialize)]
struct RunRequest {
    context_id: String,
    query: String,
    #[serde(default)]
    backend: Option<String>,
}

async fn run(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: RunRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let backend = match req.backend.as_deref() {
        None => Backend::Reference,
        Some(b) => Backend::parse(b).ok_or_else(|| ApiError::bad_request(format!("unknown backend {b:?}")))?,
    };
    let trace = tokio::task::spawn_blocking(move || {
        let opts = RunOptions { backend, agent: st.agent.clone() };
        let trace = run_pipeline(&st.store, &req.context_id, &req.query, &opts);
        if let Some(log) = &st.audit {
            if let Err(e) = log.append(&trace) {
                log::warn!("audit append failed: {e}");
            }
        }
        trace
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?;
    Ok(Json(trace).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/contexts", post(add_context).get(list_contexts))
        .route("/api/contexts/{id}", get(get_context))
        .route("/api/pipeline/run", post(run))
        .with_state(state)
}
