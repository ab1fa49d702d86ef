use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use lanescan_core::{ImageError, LaneError, PeakError};

/// Every 4xx/5xx body is `{code, message, field?}`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                field: None,
            },
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.body.field = Some(field.into());
        self
    }

    pub fn session_not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session {id:?}"))
    }

    pub fn run_not_found(run: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "run_not_found", format!("no run {run:?} in this session"))
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<LaneError> for ApiError {
    fn from(e: LaneError) -> Self {
        let code = match e {
            LaneError::DegenerateSelection(_) => "degenerate_selection",
            LaneError::CoincidentMarks(_) => "coincident_marks",
            LaneError::RectOutOfBounds { .. } => "rect_out_of_bounds",
            LaneError::InvalidMarks(_) => "invalid_marks",
            LaneError::NonFiniteClick => "non_finite_click",
        };
        Self::unprocessable(code, e.to_string())
    }
}

impl From<PeakError> for ApiError {
    fn from(e: PeakError) -> Self {
        let code = match e {
            PeakError::OverlappingPeaks { .. } => "overlapping_peaks",
            PeakError::ZeroTotalArea => "zero_total_area",
            PeakError::EmptyPeakSet => "empty_peak_set",
            PeakError::DegeneratePeak { .. } => "degenerate_peak",
            PeakError::InvalidBounds { .. } => "invalid_bounds",
            PeakError::DegenerateFront { .. } => "degenerate_front",
        };
        Self::unprocessable(code, e.to_string())
    }
}

impl From<ImageError> for ApiError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::NonFiniteAngle(_) => Self::unprocessable("non_finite_angle", e.to_string())
                .with_field("degrees"),
            ImageError::UnsupportedFormat(_) => Self::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "unsupported_image",
                e.to_string(),
            ),
            other => Self::internal(other.to_string()),
        }
    }
}
