use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ontocompo_core::workspace::{ErrorClass, WorkspaceError};
use serde::Serialize;

/// Error body shared by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub subject: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, subject: Option<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), subject } }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", message, None)
    }

    pub fn unknown_workspace(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_workspace", format!("no workspace `{id}`"), Some(id.into()))
    }

    pub fn storage(err: std::io::Error) -> Self {
        tracing::error!("storage failure: {err}");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", err.to_string(), None)
    }
}

impl From<WorkspaceError> for ApiError {
    fn from(e: WorkspaceError) -> Self {
        let status = match e.class() {
            ErrorClass::Precondition => StatusCode::CONFLICT,
            ErrorClass::NotFound => StatusCode::NOT_FOUND,
            ErrorClass::Invalid => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string(), e.subject())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
