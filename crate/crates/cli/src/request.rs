//! The analyze request shared by the HTTP service and the CLI.

use promptgauge_core::advisor::{AdvisorInput, Analyzer, TemplateFields, Thresholds};
use std::sync::Arc;

use promptgauge_core::text::EntailmentScorer;
use promptgauge_core::{Assets, Error, GapReport};
use serde::{Deserialize, Serialize};

/// `POST /v1/analyze` body: the five template fields or `raw_prompt`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeRequest {
    pub description: String,
    pub code_snippets: Vec<String>,
    pub error_log: String,
    pub libraries_frameworks: String,
    pub resources: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_prompt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub options: Option<RequestOptions>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RequestOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    /// `"default"` or the fingerprint of the loaded model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

/// A client-side error: HTTP 400, CLI exit code 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestError {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl RequestError {
    fn new(code: &'static str, message: impl Into<String>, field: Option<&str>) -> Self {
        RequestError {
            code,
            message: message.into(),
            field: field.map(str::to_owned),
        }
    }
}

impl AnalyzeRequest {
    pub fn fields(&self) -> TemplateFields {
        TemplateFields {
            description: self.description.clone(),
            code_snippets: self.code_snippets.clone(),
            error_log: self.error_log.clone(),
            libraries_frameworks: self.libraries_frameworks.clone(),
            resources: self.resources.clone(),
        }
    }

    /// Decode a JSON body, reporting the offending field path on failure.
    pub fn from_json(body: &[u8]) -> Result<Self, RequestError> {
        let de = &mut serde_json::Deserializer::from_slice(body);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = (path != ".").then_some(path);
            RequestError {
                code: "invalid_request",
                message: e.into_inner().to_string(),
                field,
            }
        })
    }

    /// Check the request and turn it into advisor input and thresholds.
    pub fn validate(&self, assets: &Assets) -> Result<(AdvisorInput, Thresholds), RequestError> {
        let fields = self.fields();
        let input = match &self.raw_prompt {
            Some(_) if !fields.is_empty() => {
                return Err(RequestError::new(
                    "mutually_exclusive",
                    "template fields and raw_prompt are mutually exclusive",
                    Some("raw_prompt"),
                ))
            }
            Some(raw) if raw.trim().is_empty() => {
                return Err(RequestError::new("empty_input", "raw_prompt is empty", Some("raw_prompt")))
            }
            Some(raw) => AdvisorInput::Raw(raw.clone()),
            None if fields.is_empty() => {
                return Err(RequestError::new(
                    "empty_input",
                    "at least one template field or raw_prompt must be non-empty",
                    None,
                ))
            }
            None => AdvisorInput::Fields(fields),
        };
        let options = self.options.clone().unwrap_or_default();
        let thresholds = options.thresholds.unwrap_or_default();
        if let Err(e) = thresholds.validate() {
            return Err(RequestError::new("invalid_request", e.to_string(), Some("options.thresholds")));
        }
        if let Some(id) = &options.model {
            let known = id == "default" || Some(id.as_str()) == assets.model_fingerprint();
            if !known {
                return Err(RequestError::new(
                    "unknown_model",
                    format!("model `{id}` is not loaded"),
                    Some("options.model"),
                ));
            }
        }
        Ok((input, thresholds))
    }
}

/// Outcome of an analysis that did not produce a report.
#[derive(Debug)]
pub enum AnalyzeFailure {
    Request(RequestError),
    /// No model is loaded (HTTP 503, CLI exit code 3).
    Unavailable(String),
    Internal(Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Version {
    pub model: Option<String>,
    pub assets: String,
}

/// Success body of `/v1/analyze` and output of `promptgauge analyze`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeResponse {
    pub version: Version,
    pub report: GapReport,
}

pub fn analyze_response(
    assets: &Assets,
    scorer: Option<Arc<dyn EntailmentScorer>>,
    request: &AnalyzeRequest,
) -> Result<AnalyzeResponse, AnalyzeFailure> {
    let (input, thresholds) = request.validate(assets).map_err(AnalyzeFailure::Request)?;
    let mut analyzer = Analyzer::new(assets)
        .map_err(|e| AnalyzeFailure::Unavailable(e.to_string()))?
        .with_thresholds(thresholds)
        .map_err(AnalyzeFailure::Internal)?;
    if let Some(s) = scorer {
        analyzer = analyzer.with_scorer(s);
    }
    let report = match analyzer.analyze(&input) {
        Ok(r) => r,
        Err(Error::EmptyInput(m)) => {
            return Err(AnalyzeFailure::Request(RequestError::new("empty_input", m, None)))
        }
        Err(e) => return Err(AnalyzeFailure::Internal(e)),
    };
    Ok(AnalyzeResponse {
        version: Version {
            model: assets.model_fingerprint().map(str::to_owned),
            assets: assets.asset_fingerprint(),
        },
        report,
    })
}

/// Compact JSON rendering of [`analyze_response`]. The CLI and the service
/// both emit exactly these bytes.
pub fn analyze_to_json(
    assets: &Assets,
    scorer: Option<Arc<dyn EntailmentScorer>>,
    request: &AnalyzeRequest,
) -> Result<String, AnalyzeFailure> {
    let response = analyze_response(assets, scorer, request)?;
    serde_json::to_string(&response)
        .map_err(|e| AnalyzeFailure::Internal(Error::Contract(e.to_string())))
}
