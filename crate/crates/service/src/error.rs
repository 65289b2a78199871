use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{what} `{id}` not found")]
    NotFound { what: &'static str, id: String },
    #[error("{detail}")]
    Validation {
        detail: String,
        field: Option<String>,
    },
    #[error("session `{0}` is closed")]
    Closed(String),
    #[error("{0}")]
    Conflict(String),
    #[error("no preferences stated yet: add at least one preference to see options")]
    EmptyModel,
    #[error("replay diverged at event {seq}: {detail}")]
    Replay { seq: u64, detail: String },
    #[error(transparent)]
    Core(#[from] critique_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed log: {0}")]
    Log(#[from] serde_json::Error),
}

impl ServiceError {
    pub fn validation(detail: impl Into<String>, field: Option<&str>) -> Self {
        ServiceError::Validation {
            detail: detail.into(),
            field: field.map(str::to_string),
        }
    }

    pub fn code(&self) -> &'static str {
        use critique_core::Error as Core;
        match self {
            ServiceError::NotFound { .. } => "not_found",
            ServiceError::Validation { .. } => "validation",
            ServiceError::Closed(_) => "session_closed",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::EmptyModel => "empty_model",
            ServiceError::Replay { .. } => "replay_mismatch",
            ServiceError::Core(Core::Io(_)) | ServiceError::Io(_) | ServiceError::Log(_) => {
                "internal"
            }
            ServiceError::Core(_) => "validation",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self.code() {
            "not_found" => StatusCode::NOT_FOUND,
            "validation" => StatusCode::UNPROCESSABLE_ENTITY,
            "session_closed" | "conflict" | "empty_model" => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    /// The offending field, when the failure can be pinned to one.
    pub fn field(&self) -> Option<String> {
        use critique_core::Error as Core;
        match self {
            ServiceError::Validation { field, .. } => field.clone(),
            ServiceError::Core(
                Core::Preference { attr, .. }
                | Core::KindMismatch { attr, .. }
                | Core::Validation { attr, .. },
            ) => Some(attr.clone()),
            ServiceError::Core(Core::UnknownAttribute(attr)) => Some(attr.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = ErrorBody {
            error: self.code(),
            detail: self.to_string(),
            field: self.field(),
        };
        (self.status(), Json(body)).into_response()
    }
}
