//! Local HTTP+JSON service under `/v1`, used by the navigator front-end.

mod error;
mod sessions;
mod store;

use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qrmap::codec::{decode_program, encode_program_with, program_stats, EncodeOptions};
use qrmap::model::VertexId;
use qrmap::vm::{activate_quick_choice, step, Answer, InputKind, VmError, VmOptions};
use serde::Deserialize;
use serde_json::json;

pub use error::ApiError;
pub use sessions::{Session, SessionView, Sessions};
pub use store::{content_id, ProgramStore};

use crate::args::ServeArgs;
use crate::commands::float_options;
use crate::input::{load_bytes, PayloadKind};
use crate::summary::{GraphView, ProgramSummary};

const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;

pub struct AppState {
    pub store: ProgramStore,
    pub sessions: Sessions,
}

type Shared = Arc<AppState>;
type ApiResult = Result<Response, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/programs", post(upload).get(list_programs))
        .route("/v1/programs/{id}", get(program_summary))
        .route("/v1/programs/{id}/graph", get(program_graph))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session).delete(delete_session))
        .route("/v1/sessions/{id}/answer", post(answer))
        .route("/v1/sessions/{id}/quick-choice", post(quick_choice))
        .fallback(|| async { ApiError::not_found("not_found", "no such endpoint") })
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

#[derive(Debug, Default, Deserialize)]
struct UploadQuery {
    #[serde(default)]
    lossy_floats: bool,
}

/// Accepts IR text, a binary payload or a PNG/JPEG of the QR code.
async fn upload(
    State(app): State<Shared>,
    query: Result<Query<UploadQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult {
    let query =
        query.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))?;
    let loaded = load_bytes(&body)?;
    let mut quantized = Vec::new();
    let program = if loaded.kind == PayloadKind::Ir {
        let encoded = encode_program_with(&loaded.program, float_options(query.lossy_floats))?;
        quantized = encoded
            .quantized
            .iter()
            .map(|q| json!({ "original": q.original, "encoded": q.encoded }))
            .collect();
        decode_program(&encoded.stream).map_err(|e| ApiError::internal(e.to_string()))?
    } else {
        loaded.program
    };
    let size = program_stats(&program, EncodeOptions::default())?;
    let summary = ProgramSummary::of(&program);
    let (id, created) = app.store.put(program)?;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    let body = json!({
        "id": id,
        "kind": loaded.kind,
        "created": created,
        "summary": summary,
        "size": size,
        "quantized": quantized,
    });
    Ok((status, Json(body)).into_response())
}

async fn list_programs(State(app): State<Shared>) -> ApiResult {
    let ids = app
        .store
        .ids()
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({ "programs": ids })).into_response())
}

async fn program_summary(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let program = app.store.get(&id)?;
    let size = program_stats(&program, EncodeOptions::default())?;
    Ok(
        Json(json!({ "id": id, "summary": ProgramSummary::of(&program), "size": size }))
            .into_response(),
    )
}

async fn program_graph(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let program = app.store.get(&id)?;
    Ok(Json(GraphView::of(&program)).into_response())
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    program_id: String,
    /// 1-based; overrides the program's origin.
    origin: Option<u64>,
    default_weight: Option<f64>,
}

async fn create_session(
    State(app): State<Shared>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult {
    let Json(req) = body?;
    let program = app.store.get(&req.program_id)?;
    let origin = match req.origin {
        Some(n) => {
            Some(VertexId::from_one_based(n).ok_or(VmError::UnknownOrigin(VertexId(u32::MAX)))?)
        }
        None => None,
    };
    let options = VmOptions {
        origin,
        default_weight: req.default_weight,
        ..VmOptions::default()
    };
    let session = app.sessions.create(req.program_id, program, options)?;
    let s = session.lock().expect("session lock");
    Ok((StatusCode::CREATED, Json(s.view())).into_response())
}

fn session(app: &AppState, id: &str) -> Result<sessions::SessionRef, ApiError> {
    app.sessions
        .get(id)
        .ok_or_else(|| ApiError::not_found("session_not_found", format!("no live session {id:?}")))
}

async fn get_session(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let session = session(&app, &id)?;
    let s = session.lock().expect("session lock");
    Ok(Json(s.view()).into_response())
}

async fn delete_session(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult {
    if app.sessions.remove(&id) {
        Ok(StatusCode::NO_CONTENT.into_response())
    } else {
        Err(ApiError::not_found(
            "session_not_found",
            format!("no live session {id:?}"),
        ))
    }
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    /// A string is read as whatever kind the session is waiting for.
    answer: serde_json::Value,
}

async fn answer(
    State(app): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<AnswerBody>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let session = session(&app, &id)?;
    let mut s = session.lock().expect("session lock");
    let expected = s.state.awaiting();
    let answer =
        match body.answer {
            serde_json::Value::String(raw) => expected
                .and_then(|k| Answer::parse_as(k, &raw))
                .ok_or(VmError::WrongInputKind {
                    expected,
                    got: Some(InputKind::Text),
                })?,
            serde_json::Value::Number(n) => Answer::Number(n.as_f64().unwrap_or(f64::NAN)),
            _ => {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "bad_request",
                    "answer must be a string or a number",
                ))
            }
        };
    let program = s.program.clone();
    step(&program, &mut s.state, Some(answer))?;
    Ok(Json(s.view()).into_response())
}

#[derive(Debug, Deserialize)]
struct QuickChoiceBody {
    index: usize,
}

async fn quick_choice(
    State(app): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<QuickChoiceBody>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let session = session(&app, &id)?;
    let mut s = session.lock().expect("session lock");
    let program = s.program.clone();
    activate_quick_choice(&program, &mut s.state, body.index)?;
    Ok(Json(s.view()).into_response())
}

pub fn app_state(args: &ServeArgs) -> anyhow::Result<Shared> {
    let store = ProgramStore::open(&args.store)
        .with_context(|| format!("opening store {}", args.store.display()))?;
    Ok(Arc::new(AppState {
        store,
        sessions: Sessions::new(Duration::from_secs(args.session_timeout)),
    }))
}

pub async fn serve(args: ServeArgs) -> anyhow::Result<()> {
    if !args.host.is_loopback() {
        bail!(
            "refusing to bind {}: the service only listens on loopback addresses",
            args.host
        );
    }
    let state = app_state(&args)?;
    let sweeper = state.clone();
    let period =
        (sweeper.sessions.timeout() / 2).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.sessions.sweep();
        }
    });
    let listener = tokio::net::TcpListener::bind((args.host, args.port))
        .await
        .with_context(|| format!("binding {}:{}", args.host, args.port))?;
    eprintln!(
        "serving http://{}/v1 (store {})",
        listener.local_addr()?,
        args.store.display()
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
