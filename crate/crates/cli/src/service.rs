//! Local HTTP service: `POST /v1/analyze` and `GET /v1/health`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use promptgauge_core::text::EntailmentScorer;
use promptgauge_core::Assets;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::request::{analyze_to_json, AnalyzeFailure, AnalyzeRequest, RequestError};

#[derive(Clone)]
pub struct AppState {
    pub assets: &'static Assets,
    pub scorer: Option<Arc<dyn EntailmentScorer>>,
}

/// Build the router. `cors_origins` lists browser origins allowed to call
/// the API; an empty list disables CORS headers.
pub fn router(state: AppState, cors_origins: &[String]) -> Router {
    let app = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/analyze", post(analyze))
        .with_state(state);
    let origins: Vec<HeaderValue> = cors_origins
        .iter()
        .filter_map(|o| HeaderValue::from_str(o).ok())
        .collect();
    if origins.is_empty() {
        return app;
    }
    app.layer(
        CorsLayer::new()
            .allow_origin(origins)
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE]),
    )
}

/// Health document: `ok` when every asset loaded, `degraded` otherwise.
pub fn health_document(assets: &Assets) -> Value {
    let missing = assets.missing();
    let mut doc = json!({
        "status": if missing.is_empty() { "ok" } else { "degraded" },
        "model": assets.model_fingerprint(),
        "asset_fingerprint": assets.asset_fingerprint(),
        "assets": assets.fingerprints(),
    });
    if !missing.is_empty() {
        doc["detail"] = json!(missing
            .iter()
            .map(|m| format!("{m} not found; analysis is unavailable"))
            .collect::<Vec<_>>());
    }
    doc
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(health_document(state.assets))
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, error: &RequestError) -> Response {
    json_response(status, json!({ "error": error }).to_string())
}

async fn analyze(State(state): State<AppState>, body: Bytes) -> Response {
    let request = match AnalyzeRequest::from_json(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, &e),
    };
    let outcome = tokio::task::spawn_blocking(move || {
        catch_unwind(AssertUnwindSafe(|| {
            analyze_to_json(state.assets, state.scorer.clone(), &request)
        }))
    })
    .await;
    match outcome {
        Ok(Ok(Ok(body))) => json_response(StatusCode::OK, body),
        Ok(Ok(Err(AnalyzeFailure::Request(e)))) => error_response(StatusCode::BAD_REQUEST, &e),
        Ok(Ok(Err(AnalyzeFailure::Unavailable(message)))) => error_response(
            StatusCode::SERVICE_UNAVAILABLE,
            &RequestError {
                code: "model_unavailable",
                message,
                field: None,
            },
        ),
        Ok(Ok(Err(AnalyzeFailure::Internal(e)))) => internal_error(&e.to_string()),
        Ok(Err(_)) => internal_error("analysis panicked"),
        Err(e) => internal_error(&e.to_string()),
    }
}

fn internal_error(detail: &str) -> Response {
    let id = uuid::Uuid::new_v4().to_string();
    tracing::error!(correlation_id = %id, "{detail}");
    json_response(
        StatusCode::INTERNAL_SERVER_ERROR,
        json!({
            "error": {
                "code": "internal",
                "message": "internal error",
                "correlation_id": id,
            }
        })
        .to_string(),
    )
}
