use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use nlfw_cli::server::{router, AppState};
use nlfw_core::context::ContextStore;
use nlfw_core::fixtures::{ECOMMERCE_JSON, SMART_FACTORY_JSON};
use nlfw_core::pipeline::AuditLog;

struct Api {
    _dir: tempfile::TempDir,
    app: axum::Router,
    audit: std::path::PathBuf,
}

impl Api {
    async fn new() -> Api {
        let dir = tempfile::tempdir().unwrap();
        let audit = dir.path().join("audit.jsonl");
        let state = AppState::new(ContextStore::open(dir.path().join("store")).unwrap(), Some(AuditLog::open(&audit).unwrap()), None);
        let api = Api { app: router(state), _dir: dir, audit };
        for doc in [ECOMMERCE_JSON, SMART_FACTORY_JSON] {
            let (status, _) = api.call("POST", "/api/contexts", Some(doc.to_string())).await;
            assert_eq!(status, StatusCode::CREATED);
        }
        api
    }

    async fn call(&self, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or_else(Body::empty, Body::from))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }
}

#[tokio::test]
async fn health() {
    let api = Api::new().await;
    assert_eq!(api.call("GET", "/api/health", None).await, (StatusCode::OK, json!({"status": "ok"})));
}

#[tokio::test]
async fn context_listing_and_fetch() {
    let api = Api::new().await;
    let (status, list) = api.call("GET", "/api/contexts", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<_> = list.as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap().to_string()).collect();
    assert_eq!(ids, ["ecommerce", "smart-factory"]);
    let (status, ctx) = api.call("GET", "/api/contexts/ecommerce", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctx["objects"]["DB"]["zone"], "trust");
    let (status, err) = api.call("GET", "/api/contexts/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "CTX_NOT_FOUND");
}

#[tokio::test]
async fn invalid_context_is_422_with_findings() {
    let api = Api::new().await;
    let (status, err) = api.call("POST", "/api/contexts", Some(r#"{"id":"x","zones":{"a":{}}}"#.into())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "CTX_SCHEMA");
    assert!(!err["findings"].as_array().unwrap().is_empty());
    let (status, err) = api.call("POST", "/api/contexts", Some("{".into())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "CTX_SYNTAX");
}

#[tokio::test]
async fn pipeline_run_returns_trace() {
    let api = Api::new().await;
    let body = json!({"context_id": "ecommerce", "query": "Allow WebServer to reach DB on TCP 5432 during business hours"});
    let (status, trace) = api.call("POST", "/api/pipeline/run", Some(body.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let stages: Vec<_> = trace["stages"].as_array().unwrap().iter().map(|s| s["stage"].as_str().unwrap()).collect();
    assert_eq!(stages, ["resolver", "ir_builder", "lint_general", "lint_panos", "safety_gate", "compiler", "verifier"]);
    assert!(trace["final"]["lines"].as_array().unwrap().iter().any(|l| l == "set service svc-tcp-5432 protocol tcp port 5432"));
    assert_eq!(std::fs::read_to_string(&api.audit).unwrap().lines().count(), 1);
}

#[tokio::test]
async fn blocked_run_has_no_final() {
    let api = Api::new().await;
    let body = json!({"context_id": "ecommerce", "query": "Allow anyone to reach anything", "backend": "reference"});
    let (_, trace) = api.call("POST", "/api/pipeline/run", Some(body.to_string())).await;
    assert_eq!(trace["stages"][4]["status"], "blocked");
    assert_eq!(trace["stages"][5]["status"], "skipped");
    assert!(trace["final"].is_null());
}

#[tokio::test]
async fn malformed_run_requests() {
    let api = Api::new().await;
    let (status, err) = api.call("POST", "/api/pipeline/run", Some(r#"{"query":"x"}"#.into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "REQUEST_INVALID");
    let body = json!({"context_id": "ecommerce", "query": "x", "backend": "oracle"});
    let (status, _) = api.call("POST", "/api/pipeline/run", Some(body.to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn concurrent_runs_are_independent() {
    let api = Api::new().await;
    let queries = ["Allow WebServer to reach DB over HTTPS", "Allow SCADA to reach PLC-Line1 over Modbus"];
    let ctxs = ["ecommerce", "smart-factory"];
    let mut handles = Vec::new();
    for i in 0..16 {
        let app = api.app.clone();
        let body = json!({"context_id": ctxs[i % 2], "query": queries[i % 2]}).to_string();
        handles.push(tokio::spawn(async move {
            let req = Request::post("/api/pipeline/run").body(Body::from(body)).unwrap();
            let bytes = app.oneshot(req).await.unwrap().into_body().collect().await.unwrap().to_bytes();
            let v: Value = serde_json::from_slice(&bytes).unwrap();
            (i % 2, v["final"]["lines"].clone())
        }));
    }
    let mut seen: [Option<Value>; 2] = [None, None];
    for h in handles {
        let (k, lines) = h.await.unwrap();
        match &seen[k] {
            Some(prev) => assert_eq!(prev, &lines),
            None => seen[k] = Some(lines),
        }
    }
}
