use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use corpaudit_core::taxonomy::Violation;
use serde_json::json;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown project {0:?}")]
    UnknownProject(String),

    #[error("project {0:?} already exists")]
    DuplicateProject(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("annotation rejected: {}", .0.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; "))]
    Rejected(Vec<Violation>),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt project data: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Core(#[from] corpaudit_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ServiceError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        ServiceError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownProject(_) => StatusCode::NOT_FOUND,
            ServiceError::DuplicateProject(_) => StatusCode::CONFLICT,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Core(corpaudit_core::Error::Io { .. }) => StatusCode::BAD_REQUEST,
            ServiceError::Core(
                corpaudit_core::Error::InvalidArgument(_)
                | corpaudit_core::Error::UnknownLabel { .. }
                | corpaudit_core::Error::InvalidUtf8 { .. }
                | corpaudit_core::Error::ColumnCount { .. }
                | corpaudit_core::Error::Empty(_),
            ) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        let body = match &self {
            ServiceError::Rejected(violations) => json!({
                "error": self.to_string(),
                "violations": violations,
            }),
            _ => json!({ "error": self.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}
