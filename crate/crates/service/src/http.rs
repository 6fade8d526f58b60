use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::model::{ReviewRequest, ReviewStatus, SubmissionRequest, WorkerRequest};
use crate::service::AnnotationService;

#[derive(Debug, Clone, Default)]
pub struct RouterOptions {
    /// Directory of painting images, looked up as `<id>.<ext>`.
    pub image_dir: Option<PathBuf>,
    /// Built front-end assets, served at `/`.
    pub ui_dir: Option<PathBuf>,
}

type AppState = Arc<AnnotationService>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(json!({ "error": self.code(), "message": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

async fn register(State(svc): State<AppState>, Json(req): Json<WorkerRequest>) -> ApiResult<impl IntoResponse> {
    svc.register_worker(&req.worker_id)?;
    Ok((StatusCode::CREATED, Json(json!({ "worker_id": req.worker_id.trim() }))))
}

#[derive(Deserialize)]
struct NextQuery {
    worker: String,
}

async fn next_task(State(svc): State<AppState>, Query(q): Query<NextQuery>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.next_task(&q.worker)?))
}

async fn submit(State(svc): State<AppState>, Json(req): Json<SubmissionRequest>) -> ApiResult<impl IntoResponse> {
    Ok((StatusCode::CREATED, Json(svc.submit(req)?)))
}

#[derive(Deserialize)]
struct SubmissionFilter {
    status: Option<ReviewStatus>,
}

async fn list_submissions(State(svc): State<AppState>, Query(f): Query<SubmissionFilter>) -> impl IntoResponse {
    let mut subs = svc.submissions();
    if let Some(status) = f.status {
        subs.retain(|s| s.review_status == status);
    }
    Json(subs)
}

async fn review(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ReviewRequest>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.review(&id, req)?))
}

async fn export(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.export_contrastive())
}

async fn stats(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.stats())
}

const IMAGE_TYPES: &[(&str, &str)] = &[
    ("jpg", "image/jpeg"),
    ("jpeg", "image/jpeg"),
    ("png", "image/png"),
    ("webp", "image/webp"),
    ("gif", "image/gif"),
];

async fn image(State(dir): State<Option<PathBuf>>, Path(id): Path<String>) -> ApiResult<Response> {
    let not_found = || ServiceError::not_found("image", id.clone());
    let dir = dir.ok_or_else(not_found)?;
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(not_found());
    }
    for (ext, mime) in IMAGE_TYPES {
        if let Ok(bytes) = tokio::fs::read(dir.join(format!("{id}.{ext}"))).await {
            return Ok(([(header::CONTENT_TYPE, *mime)], bytes).into_response());
        }
    }
    Err(not_found())
}

/// The JSON API plus static image and UI routes.
pub fn router(service: Arc<AnnotationService>, options: RouterOptions) -> Router {
    let api = Router::new()
        .route("/workers", post(register))
        .route("/tasks/next", get(next_task))
        .route("/submissions", post(submit).get(list_submissions))
        .route("/submissions/{id}/review", post(review))
        .route("/export/contrastive", get(export))
        .route("/stats", get(stats))
        .with_state(service);
    let images = Router::new().route("/images/{id}", get(image)).with_state(options.image_dir);
    let app = api.merge(images);
    match options.ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until `shutdown` resolves, then checkpoints the service.
pub async fn serve(
    listener: TcpListener,
    service: Arc<AnnotationService>,
    options: RouterOptions,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(service.clone(), options);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    service.checkpoint().map_err(std::io::Error::other)
}
