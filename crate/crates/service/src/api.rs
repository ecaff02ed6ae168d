//! HTTP front end over a [`SessionStore`].
//!
//! Every error is an `application/problem+json` body with `status`, `title`
//! and `detail`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use draftmarks_core::controller::{Role, UnknownRole};
use draftmarks_core::schema_io::canonical_json;
use draftmarks_core::store::{SessionStore, StoreError};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;

/// Largest accepted session log.
pub const MAX_LOG_BYTES: usize = 64 * 1024 * 1024;

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/v1/healthz", get(healthz))
        .route("/v1/sessions", post(ingest))
        .route("/v1/sessions/{id}/schema", get(schema))
        .route("/v1/sessions/{id}/export", get(export))
        .route("/v1/sessions/{id}/log", get(raw_log))
        .fallback(|| async { problem(StatusCode::NOT_FOUND, "no such endpoint") })
        .layer(DefaultBodyLimit::max(MAX_LOG_BYTES))
        .with_state(store)
}

pub async fn serve(listener: TcpListener, store: Arc<SessionStore>) -> std::io::Result<()> {
    axum::serve(listener, router(store)).await
}

pub fn problem(status: StatusCode, detail: impl Into<String>) -> Response {
    let body = json!({
        "status": status.as_u16(),
        "title": status.canonical_reason().unwrap_or("error"),
        "detail": detail.into(),
    });
    (
        status,
        [(header::CONTENT_TYPE, "application/problem+json")],
        canonical_json(&body),
    )
        .into_response()
}

fn json_response(status: StatusCode, body: impl Into<axum::body::Body>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body.into()).into_response()
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        problem(self.0, self.1)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            e if e.is_client_error() => StatusCode::BAD_REQUEST,
            _ => {
                tracing::error!(error = %e, "store failure");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError(status, e.to_string())
    }
}

#[derive(Deserialize)]
struct RoleQuery {
    role: Option<String>,
}

impl RoleQuery {
    fn role(&self) -> Result<Role, ApiError> {
        let raw = self
            .role
            .as_deref()
            .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "missing role parameter".into()))?;
        raw.parse()
            .map_err(|e: UnknownRole| ApiError(StatusCode::BAD_REQUEST, e.to_string()))
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StoreError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => {
            tracing::error!(error = %e, "worker panicked");
            Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal error".into()))
        }
    }
}

async fn healthz() -> Response {
    json_response(StatusCode::OK, canonical_json(&json!({"status": "ok"})))
}

async fn ingest(State(store): State<Arc<SessionStore>>, body: Bytes) -> Result<Response, ApiError> {
    let (id, stored) = blocking(move || store.store_session(&body)).await?;
    let status = if stored.created {
        tracing::info!(%id, "session stored");
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok(json_response(status, canonical_json(&json!({ "id": id }))))
}

async fn schema(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<RoleQuery>,
) -> Result<Response, ApiError> {
    let role = q.role()?;
    let bytes = blocking(move || store.get_schema(&id, role)).await?;
    Ok(json_response(StatusCode::OK, bytes))
}

async fn export(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<RoleQuery>,
) -> Result<Response, ApiError> {
    let role = q.role()?;
    let html = blocking(move || store.get_export(&id, role)).await?;
    Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response())
}

/// The raw log is writer-only. The role is checked before the id so that a
/// reader cannot probe which sessions exist.
async fn raw_log(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<RoleQuery>,
) -> Result<Response, ApiError> {
    if q.role.is_none() || q.role()? != Role::Writer {
        return Err(ApiError(StatusCode::FORBIDDEN, "the raw log requires role=writer".into()));
    }
    let bytes = blocking(move || store.raw_log(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response())
}
