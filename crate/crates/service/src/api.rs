//! HTTP API over a [`SessionStore`].
//!
//! | method | path | body → response |
//! |---|---|---|
//! | POST | `/sessions` | `{"calibration": name \| "uncalibrated" \| null}` → 201 session |
//! | GET | `/sessions/{id}` | → session |
//! | POST | `/sessions/{id}/utterances` | `{"speaker"?, "role", "text", "timestamp_ms"?}` → 202 ack |
//! | GET | `/sessions/{id}/moments` | → `{session_id, status, turns, utterances, moments: [...]}` |
//! | POST | `/sessions/{id}/whatif` | `{"draft"}` → `{p_before, p_after, delta}` |
//! | GET | `/sessions/{id}/moments/{k}/simulations` | → `{k, piv, n_used, samples: [{response, probability}]}` |
//! | POST | `/sessions/{id}/moments/{k}/retry` | → 202 moment |
//! | POST | `/sessions/{id}/close` | → session |
//! | GET | `/sessions/{id}/transcript` | → conversation in corpus form |
//! | GET | `/healthz` | → `{status, sessions}` (never needs a token) |
//!
//! Errors are `{"error": {"code", "message"}}` with a matching status code.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::store::{NewUtterance, ServiceError, SessionStore};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::UnknownSession(_) | ServiceError::UnknownMoment(_) => StatusCode::NOT_FOUND,
            ServiceError::UnknownCalibration(_) | ServiceError::InvalidRequest(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::SessionClosed(_)
            | ServiceError::StaleTimestamp { .. }
            | ServiceError::WrongTurn
            | ServiceError::NotReady(_)
            | ServiceError::RetryNotAllowed(_) => StatusCode::CONFLICT,
            ServiceError::Backend { transient: true, .. } => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Backend { .. } => StatusCode::BAD_GATEWAY,
            ServiceError::Journal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
struct AppState {
    store: Arc<SessionStore>,
    token: Option<Arc<str>>,
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

/// Runs a store call off the async executor; backends may block on network I/O.
async fn blocking<T, F>(store: &Arc<SessionStore>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&SessionStore) -> Result<T, ServiceError> + Send + 'static,
{
    let store = store.clone();
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    calibration: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WhatIfRequest {
    draft: String,
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    sessions: usize,
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let request: CreateSession = parse(&body)?;
    let summary = blocking(&app.store, move |s| s.create_session(request.calibration.as_deref())).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.session(&id)?))
}

async fn append(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let utterance: NewUtterance = parse(&body)?;
    let ack = blocking(&app.store, move |s| s.append_utterance(&id, utterance)).await?;
    Ok((StatusCode::ACCEPTED, Json(ack)))
}

async fn moments(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.moments(&id)?))
}

async fn whatif(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let request: WhatIfRequest = parse(&body)?;
    Ok(Json(blocking(&app.store, move |s| s.whatif(&id, &request.draft)).await?))
}

async fn simulations(State(app): State<AppState>, Path((id, k)): Path<(String, usize)>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.simulations(&id, k)?))
}

async fn retry(State(app): State<AppState>, Path((id, k)): Path<(String, usize)>) -> ApiResult<impl IntoResponse> {
    Ok((StatusCode::ACCEPTED, Json(app.store.retry(&id, k)?)))
}

async fn close(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&app.store, move |s| s.close(&id)).await?))
}

async fn transcript(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.transcript(&id)?))
}

async fn health(State(app): State<AppState>) -> impl IntoResponse {
    Json(Health {
        status: "ok",
        sessions: app.store.session_ids().len(),
    })
}

async fn require_token(State(app): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(token) = &app.token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_ref()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(request).await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

/// Builds the router. With `token`, every route except `/healthz` requires
/// `Authorization: Bearer <token>`.
pub fn router(store: Arc<SessionStore>, token: Option<String>) -> Router {
    let state = AppState {
        store,
        token: token.map(Arc::from),
    };
    let sessions = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/utterances", post(append))
        .route("/sessions/{id}/moments", get(moments))
        .route("/sessions/{id}/whatif", post(whatif))
        .route("/sessions/{id}/moments/{k}/simulations", get(simulations))
        .route("/sessions/{id}/moments/{k}/retry", post(retry))
        .route("/sessions/{id}/close", post(close))
        .route("/sessions/{id}/transcript", get(transcript))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/healthz", get(health))
        .merge(sessions)
        .fallback(not_found)
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
