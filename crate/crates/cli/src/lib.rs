//! Command-line and HTTP front ends for `promptgauge-core`.

pub mod nli;
pub mod request;
pub mod service;

pub use request::{
    analyze_response, analyze_to_json, AnalyzeFailure, AnalyzeRequest, AnalyzeResponse,
    RequestError, RequestOptions,
};
pub use service::{health_document, router, AppState};

/// JSON Schemas of the service responses.
pub mod schema {
    pub const ANALYZE_RESPONSE: &str = include_str!("../schema/analyze_response.schema.json");
    pub const ERROR_RESPONSE: &str = include_str!("../schema/error_response.schema.json");
    pub const HEALTH_RESPONSE: &str = include_str!("../schema/health_response.schema.json");
}
