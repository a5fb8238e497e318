//! HTTP routes.
//!
//! | method | path | body / query |
//! |---|---|---|
//! | POST | `/projects` | [`CreateProject`] |
//! | GET | `/projects` | |
//! | GET | `/projects/{id}` | |
//! | GET | `/projects/{id}/items` | `rater`, `limit` |
//! | POST | `/projects/{id}/annotations` | [`Submission`] |
//! | GET | `/projects/{id}/progress` | |
//! | GET | `/projects/{id}/export` | |
//!
//! The export body is annotation JSONL; its manifest is sent as JSON in the
//! `x-audit-manifest` header so the body stays a plain line file.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::error::{Result, ServiceError};
use crate::store::{CreateProject, ProjectStore, Submission};

pub const MANIFEST_HEADER: &str = "x-audit-manifest";
const DEFAULT_LIMIT: usize = 20;

type AppState = Arc<ProjectStore>;

pub fn router(store: Arc<ProjectStore>) -> Router {
    Router::new()
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(project))
        .route("/projects/{id}/items", get(items))
        .route("/projects/{id}/annotations", post(annotate))
        .route("/projects/{id}/progress", get(progress))
        .route("/projects/{id}/export", get(export))
        .with_state(store)
}

fn body<T>(payload: std::result::Result<Json<T>, JsonRejection>) -> Result<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

async fn create_project(
    State(store): State<AppState>,
    payload: std::result::Result<Json<CreateProject>, JsonRejection>,
) -> Result<impl IntoResponse> {
    let req = body(payload)?;
    let manifest = store.create_project(&req)?;
    Ok((StatusCode::CREATED, Json(manifest)))
}

async fn list_projects(State(store): State<AppState>) -> Json<Vec<String>> {
    Json(store.project_ids())
}

async fn project(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse> {
    Ok(Json(store.manifest(&id)?))
}

#[derive(Debug, Deserialize)]
struct ItemsQuery {
    rater: String,
    limit: Option<usize>,
}

async fn items(
    State(store): State<AppState>,
    Path(id): Path<String>,
    query: std::result::Result<Query<ItemsQuery>, QueryRejection>,
) -> Result<impl IntoResponse> {
    let Query(q) = query.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    if q.rater.trim().is_empty() {
        return Err(ServiceError::BadRequest("rater must not be empty".into()));
    }
    Ok(Json(store.next_items(
        &id,
        q.rater.trim(),
        q.limit.unwrap_or(DEFAULT_LIMIT),
    )?))
}

async fn annotate(
    State(store): State<AppState>,
    Path(id): Path<String>,
    payload: std::result::Result<Json<Submission>, JsonRejection>,
) -> Result<impl IntoResponse> {
    let sub = body(payload)?;
    Ok((StatusCode::CREATED, Json(store.submit(&id, &sub)?)))
}

async fn progress(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse> {
    Ok(Json(store.progress(&id)?))
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    let (manifest, lines) = store.export(&id)?;
    let mut out = Vec::new();
    corpaudit_core::export::write_jsonl(&mut out, &lines)?;
    let manifest = HeaderValue::from_str(&serde_json::to_string(&manifest)?)
        .map_err(|e| ServiceError::Corrupt(format!("manifest header: {e}")))?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/x-ndjson")),
            (header::HeaderName::from_static(MANIFEST_HEADER), manifest),
        ],
        out,
    )
        .into_response())
}

/// Serve until Ctrl-C.
pub async fn serve(store: Arc<ProjectStore>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    if !addr.ip().is_loopback() {
        log::warn!("bound to non-loopback address {addr}; there is no authentication");
    }
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
