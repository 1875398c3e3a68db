use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

/// An HTTP status with a message, rendered as `{"error": "..."}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
    pub fn no_bundle() -> Self {
        Self::not_found("no decomposition loaded")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            log::error!("{}", self.message);
        }
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<pigment_core::Error> for ApiError {
    fn from(e: pigment_core::Error) -> Self {
        match e {
            pigment_core::Error::SolverFailure { .. } => Self::internal(e.to_string()),
            _ => Self::unprocessable(e.to_string()),
        }
    }
}

impl From<pigment_io::IoError> for ApiError {
    fn from(e: pigment_io::IoError) -> Self {
        use pigment_io::IoError;
        match e {
            IoError::Core(c) => c.into(),
            IoError::File { .. } => Self::not_found(e.to_string()),
            _ => Self::unprocessable(e.to_string()),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
