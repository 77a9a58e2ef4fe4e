//! HTTP front end for annotation sessions.
//!
//! Routes:
//! - `GET /api/session` session metadata and guidelines
//! - `GET /api/next?annotator=ID` next unscored task, or 204 when done
//! - `POST /api/score` submit `{annotator_id, item_id, score}`
//! - `GET /api/export` annotation matrix as TSV

use std::future::Future;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pivotforge::annotation::{ScoreSubmission, Session};
use pivotforge::evalstats::write_matrix;
use pivotforge::Error;
use serde::{Deserialize, Serialize};

/// Shared state. The mutex makes the session the single ledger writer.
#[derive(Clone)]
pub struct AppState {
    session: Arc<Mutex<Session>>,
}

impl AppState {
    pub fn new(session: Session) -> Self {
        AppState {
            session: Arc::new(Mutex::new(session)),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        // A panic while holding the lock cannot leave the ledger half
        // written (appends complete before state changes), so keep serving.
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub ok: bool,
    pub error: String,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { ok: false, error: self.1 };
        (self.0, Json(body)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Invalid(_) | Error::Parse { .. } | Error::Record { .. } => StatusCode::BAD_REQUEST,
            Error::Integrity(_) => StatusCode::NOT_FOUND,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        ApiError(status, e.to_string())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/session", get(session_info))
        .route("/api/next", get(next_task))
        .route("/api/score", post(submit_score))
        .route("/api/export", get(export))
        .with_state(state)
}

async fn session_info(State(state): State<AppState>) -> Response {
    Json(state.lock().info()).into_response()
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

async fn next_task(State(state): State<AppState>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    let annotator = q
        .annotator
        .filter(|a| !a.trim().is_empty())
        .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "missing annotator parameter".into()))?;
    Ok(match state.lock().next_task(&annotator) {
        Some(task) => Json(task).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn submit_score(
    State(state): State<AppState>,
    body: Result<Json<ScoreSubmission>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(sub) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    let ack = state.lock().submit_score(sub)?;
    Ok(Json(ack).into_response())
}

async fn export(State(state): State<AppState>) -> Result<Response, ApiError> {
    let matrix = state.lock().export_matrix();
    let mut buf = Vec::new();
    write_matrix(&matrix, &mut buf)?;
    Ok(([(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")], buf).into_response())
}

/// Serves `session` on `listener` until `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, session: Session, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    if let Ok(addr) = listener.local_addr() {
        log::info!("annotation service listening on http://{addr}");
    }
    axum::serve(listener, router(AppState::new(session)))
        .with_graceful_shutdown(shutdown)
        .await
}
