use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use tracker_core::ingest::SubmissionError;
use tracker_core::tracking::{ScopeError, TrackingError};

/// An error response: status plus a JSON body `{"error": kind, "detail": text}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub detail: String,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    detail: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, detail: impl Into<String>) -> Self {
        Self { status, kind, detail: detail.into() }
    }

    pub fn bad_request(kind: &'static str, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, kind, detail)
    }

    pub fn not_found(kind: &'static str, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, kind, detail)
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(Body { error: self.kind, detail: &self.detail })).into_response()
    }
}

impl From<ScopeError> for ApiError {
    fn from(e: ScopeError) -> Self {
        let detail = e.to_string();
        match e {
            ScopeError::ScenarioWithoutMap => Self::bad_request("ScenarioWithoutMap", detail),
            ScopeError::EmptyAgentRange(..) => Self::bad_request("EmptyAgentRange", detail),
            ScopeError::UnknownMap(_) => Self::not_found("UnknownMap", detail),
            ScopeError::UnknownScenario(_) => Self::not_found("UnknownScenario", detail),
            ScopeError::EmptyScope(_) => Self::not_found("EmptyScope", detail),
        }
    }
}

impl From<TrackingError> for ApiError {
    fn from(e: TrackingError) -> Self {
        match e {
            TrackingError::Scope(s) => s.into(),
            TrackingError::UnknownAlgorithm(_) => Self::not_found("UnknownAlgorithm", e.to_string()),
            TrackingError::Store(s) => Self::internal(s.to_string()),
        }
    }
}

impl From<SubmissionError> for ApiError {
    fn from(e: SubmissionError) -> Self {
        let kind = match e {
            SubmissionError::MissingHeader => "MissingHeader",
            SubmissionError::ColumnCountMismatch { .. } => "ColumnCountMismatch",
            SubmissionError::Csv(_) => "MalformedCsv",
            SubmissionError::Descriptor(_) => "MalformedDescriptor",
            SubmissionError::EmptyDescriptorField(_) => "EmptyDescriptorField",
        };
        Self::bad_request(kind, e.to_string())
    }
}
