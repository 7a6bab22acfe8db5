//! Problem responses.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use repolicy::domain::DomainError;
use repolicy::interview::InterviewError;
use repolicy::purpose::PurposeError;
use repolicy::store::StoreError;
use repolicy::transform::TransformError;

/// Body of every error response. `code` is stable and machine-readable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Problem {
    pub status: u16,
    pub code: String,
    pub title: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub remaining: Vec<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub remaining: Vec<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), remaining: Vec::new() }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} `{id}`"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Problem {
            status: self.status.as_u16(),
            code: self.code.to_string(),
            title: self.message,
            remaining: self.remaining,
        };
        let mut resp = (self.status, Json(body)).into_response();
        resp.headers_mut().insert(
            axum::http::header::CONTENT_TYPE,
            axum::http::HeaderValue::from_static("application/problem+json"),
        );
        resp
    }
}

impl From<InterviewError> for ApiError {
    fn from(e: InterviewError) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            InterviewError::UnknownQuestion(_) => (StatusCode::NOT_FOUND, "unknown_question"),
            InterviewError::UnservedQuestion(_) => (StatusCode::CONFLICT, "unserved_question"),
            InterviewError::TypeMismatch { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "type_mismatch"),
            InterviewError::IncompleteInterview { remaining } => {
                return ApiError {
                    status: StatusCode::CONFLICT,
                    code: "incomplete_interview",
                    message,
                    remaining: remaining.clone(),
                }
            }
            InterviewError::AlreadyConcluded => (StatusCode::CONFLICT, "already_concluded"),
            InterviewError::NotConcluded => (StatusCode::CONFLICT, "not_concluded"),
            InterviewError::NotPermitted => (StatusCode::CONFLICT, "not_permitted"),
            InterviewError::Unconfirmed(ids) => {
                return ApiError {
                    status: StatusCode::CONFLICT,
                    code: "unconfirmed_affirmations",
                    message,
                    remaining: ids.clone(),
                }
            }
            InterviewError::TooManyOpenQuestions(_) => (StatusCode::UNPROCESSABLE_ENTITY, "too_many_open_questions"),
            InterviewError::Domain(d) => return ApiError::from_domain(d, message),
            InterviewError::License(_) => (StatusCode::UNPROCESSABLE_ENTITY, "license"),
        };
        ApiError::new(status, code, message)
    }
}

impl ApiError {
    fn from_domain(e: &DomainError, message: String) -> Self {
        match e {
            DomainError::Contradiction { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "contradiction", message),
            DomainError::UnknownDomain(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_domain", message),
            DomainError::UnknownAbducible(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_abducible", message),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "domain", message),
        }
    }
}

impl From<DomainError> for ApiError {
    fn from(e: DomainError) -> Self {
        let message = e.to_string();
        ApiError::from_domain(&e, message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Domain(d) => d.into(),
            StoreError::VersionUnavailable { .. } => ApiError::new(StatusCode::CONFLICT, "version_unavailable", e.to_string()),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<TransformError> for ApiError {
    fn from(e: TransformError) -> Self {
        let code = match e {
            TransformError::Cycle { .. } => "derivation_cycle",
            TransformError::MissingParam { .. } => "missing_param",
            TransformError::NonPositive { .. } => "non_positive_param",
            TransformError::DuplicateOutput(_) => "duplicate_output",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<PurposeError> for ApiError {
    fn from(e: PurposeError) -> Self {
        let code = match e {
            PurposeError::UnknownCode(_) => "unknown_code",
            PurposeError::EmptyRequest => "empty_purpose",
            _ => "purpose",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}
