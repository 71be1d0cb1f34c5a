use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use qrmap::codec::{DecodeError, EncodeError};
use qrmap::qrio::QrError;
use qrmap::vm::VmError;
use serde_json::json;

use crate::input::LoadError;

/// An error payload: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

fn decode_code(e: &DecodeError) -> &'static str {
    match e {
        DecodeError::BadMagic(_) => "bad_magic",
        DecodeError::UnsupportedDialect(_) | DecodeError::UnsupportedVersion(_) => {
            "unsupported_format"
        }
        DecodeError::TruncatedStream { .. } => "truncated_stream",
        DecodeError::Invalid(_) => "invalid_program",
        _ => "malformed_payload",
    }
}

impl From<LoadError> for ApiError {
    fn from(e: LoadError) -> Self {
        let code = match &e {
            LoadError::Io { .. } => return ApiError::internal(e.to_string()),
            LoadError::Parse(qrmap::ir::ParseError::Invalid(_)) => "invalid_program",
            LoadError::Parse(_) => "parse_error",
            LoadError::Decode(d) => decode_code(d),
            LoadError::Qr(QrError::NoQrFound) => "no_qr_found",
            LoadError::Qr(QrError::MultipleQrFound(_)) => "multiple_qr_found",
            LoadError::Qr(_) => "unreadable_image",
            LoadError::Unrecognized => "unrecognized_payload",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<EncodeError> for ApiError {
    fn from(e: EncodeError) -> Self {
        let code = match &e {
            EncodeError::FloatNotRepresentable { .. } => "float_not_representable",
            EncodeError::Invalid(_) => "invalid_program",
            _ => "not_encodable",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<VmError> for ApiError {
    fn from(e: VmError) -> Self {
        let (status, code) = match &e {
            VmError::NoOrigin => (StatusCode::UNPROCESSABLE_ENTITY, "no_origin"),
            VmError::UnknownOrigin(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_origin"),
            VmError::WrongInputKind { .. } => (StatusCode::CONFLICT, "wrong_input_kind"),
            VmError::UnknownQuickChoice(_) => (StatusCode::NOT_FOUND, "unknown_quick_choice"),
            VmError::QuickChoiceUnavailable => (StatusCode::CONFLICT, "quick_choice_unavailable"),
            VmError::JumpOutOfRange { .. } | VmError::StepBudgetExceeded(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "program_fault")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}
