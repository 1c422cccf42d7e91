use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use serde::Serialize;

use crate::wire::to_json_bytes;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    /// 400: malformed body or parameters outside their domain.
    #[error("invalid request: {}", summary(.0))]
    Invalid(Vec<FieldError>),
    /// 422: valid parameters with no answer (e.g. zero signal).
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// 413: grid larger than the interactive cap.
    #[error("request too large: {0}")]
    TooLarge(String),
    #[error("internal error: {0}")]
    Internal(String),
}

fn summary(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("{}: {}", e.field, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl ApiError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError::Invalid(vec![FieldError::new(field, message)])
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Invalid(_) => StatusCode::BAD_REQUEST,
            ApiError::Infeasible(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::TooLarge(_) => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ApiError::Invalid(_) => "invalid_request",
            ApiError::Infeasible(_) => "infeasible",
            ApiError::TooLarge(_) => "too_large",
            ApiError::Internal(_) => "internal",
        }
    }

    /// Maps a core error raised after field validation passed.
    pub fn from_core(err: suprec::Error, field: &str) -> Self {
        match err {
            suprec::Error::Domain(m) => ApiError::field(field, m),
            suprec::Error::Infeasible(m) => ApiError::Infeasible(m),
            suprec::Error::Parse { line, msg, .. } => ApiError::field(field, format!("line {line}: {msg}")),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'static str,
    message: String,
    fields: &'a [FieldError],
}

pub fn error_body(err: &ApiError) -> Vec<u8> {
    let fields: &[FieldError] = match err {
        ApiError::Invalid(f) => f,
        _ => &[],
    };
    to_json_bytes(&ErrorBody {
        error: err.kind(),
        message: err.to_string(),
        fields,
    })
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), [(header::CONTENT_TYPE, "application/json")], error_body(&self)).into_response()
    }
}
