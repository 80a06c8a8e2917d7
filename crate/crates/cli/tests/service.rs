use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use promptgauge::{router, schema, AppState};
use promptgauge_core::Assets;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(assets: &'static Assets) -> axum::Router {
    router(AppState { assets, scorer: None }, &["http://localhost:5173".to_string()])
}

fn degraded_assets() -> &'static Assets {
    let dir = tempfile::tempdir().unwrap();
    Assets::write_bundled(dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("model.json")).unwrap();
    Box::leak(Box::new(Assets::load_dir(dir.path()).unwrap()))
}

async fn send(app: axum::Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.oneshot(req).await.unwrap();
    let status = res.status();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn post(assets: &'static Assets, body: impl Into<Body>) -> (StatusCode, Value) {
    let req = Request::post("/v1/analyze")
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    let (status, bytes) = send(app(assets), req).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn validate(schema_text: &str, doc: &Value) {
    let schema: Value = serde_json::from_str(schema_text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{doc}");
}

#[tokio::test]
async fn health_reports_ok_with_bundled_assets() {
    let req = Request::get("/v1/health").body(Body::empty()).unwrap();
    let (status, body) = send(app(Assets::bundled()), req).await;
    assert_eq!(status, StatusCode::OK);
    let doc: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(doc["status"], "ok");
    assert!(doc["model"].is_string());
    validate(schema::HEALTH_RESPONSE, &doc);
}

#[tokio::test]
async fn missing_model_degrades_health_and_refuses_analysis() {
    let assets = degraded_assets();
    let req = Request::get("/v1/health").body(Body::empty()).unwrap();
    let (_, body) = send(app(assets), req).await;
    let doc: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(doc["status"], "degraded");
    assert!(doc["detail"][0].as_str().unwrap().contains("model.json"));
    validate(schema::HEALTH_RESPONSE, &doc);

    let (status, doc) = post(assets, json!({"description": "Fix the login bug."}).to_string()).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(doc["error"]["code"], "model_unavailable");
    validate(schema::ERROR_RESPONSE, &doc);
}

#[tokio::test]
async fn analyze_returns_a_schema_valid_report() {
    let body = json!({
        "description": "My React app crashes when I submit the login form.",
        "code_snippets": ["function submit() { api.login(user); }"],
        "error_log": "TypeError: Cannot read properties of undefined (reading 'token')",
        "libraries_frameworks": "React 18, axios 1.6",
        "resources": "https://react.dev/reference/react"
    });
    let (status, doc) = post(Assets::bundled(), body.to_string()).await;
    assert_eq!(status, StatusCode::OK);
    validate(schema::ANALYZE_RESPONSE, &doc);
    assert_eq!(doc["version"]["model"].as_str(), Assets::bundled().model_fingerprint());
}

#[tokio::test]
async fn repeated_requests_are_byte_identical() {
    let body = json!({"raw_prompt": "How do I fix this null pointer? It happens when the app starts."}).to_string();
    let mut seen = Vec::new();
    for _ in 0..3 {
        let req = Request::post("/v1/analyze").body(Body::from(body.clone())).unwrap();
        let (status, bytes) = send(app(Assets::bundled()), req).await;
        assert_eq!(status, StatusCode::OK);
        seen.push(bytes);
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn client_errors_are_400_with_codes() {
    let cases = [
        ("{", "invalid_request", None),
        (r#"{"description": 3}"#, "invalid_request", Some("description")),
        (r#"{"bogus": 1}"#, "invalid_request", None),
        (r#"{"description": "   "}"#, "empty_input", None),
        (r#"{"description": "x", "raw_prompt": "y"}"#, "mutually_exclusive", Some("raw_prompt")),
        (
            r#"{"description": "x", "options": {"thresholds": {"clarity": 140}}}"#,
            "invalid_request",
            Some("options.thresholds"),
        ),
        (r#"{"description": "x", "options": {"model": "other"}}"#, "unknown_model", Some("options.model")),
    ];
    for (body, code, field) in cases {
        let (status, doc) = post(Assets::bundled(), body.to_string()).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(doc["error"]["code"], code, "{body}");
        if let Some(f) = field {
            assert_eq!(doc["error"]["field"], f, "{body}");
        }
        validate(schema::ERROR_RESPONSE, &doc);
    }
}

#[tokio::test]
async fn cors_preflight_allows_the_ui_origin() {
    let req = Request::options("/v1/analyze")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let res = app(Assets::bundled()).oneshot(req).await.unwrap();
    assert_eq!(
        res.headers()["access-control-allow-origin"],
        "http://localhost:5173"
    );
}
