//! HTTP/JSON surface of the job service.
//!
//! | method | path                                  |                                  |
//! |--------|---------------------------------------|----------------------------------|
//! | POST   | `/v1/jobs`                            | multipart `image` + `options`    |
//! | GET    | `/v1/jobs`                            | all jobs, oldest first           |
//! | GET    | `/v1/jobs/{id}`                       | job snapshot                     |
//! | GET    | `/v1/jobs/{id}/stencils/{c,m,y,k}.png`| stencil preview                  |
//! | GET    | `/v1/jobs/{id}/frames/{c,m,y,k}.escpos`| raw raster frame                |
//! | POST   | `/v1/jobs/{id}/print`                 | send frames to the printer       |
//! | POST   | `/v1/jobs/{id}/print-error`           | print a Failed job's error code  |
//! | GET    | `/v1/healthz`                         | liveness                         |
//!
//! Failed jobs additionally expose `stencils/error.png` and `frames/error.escpos`.

use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use std::net::SocketAddr;
use tokio::net::TcpListener;
use tracing::info;

use crate::job::PrintJob;
use crate::printer::{open_device, PrinterSession};
use crate::service::{Faults, JobOptions, PrintError, Service, SubmitError};
use crate::settings::Settings;
use crate::stylizer::stub_router;

/// Uploads up to 4096x4096 RGBA fit comfortably.
pub const MAX_UPLOAD_BYTES: usize = 96 * 1024 * 1024;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail: None,
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": {"code": self.code, "message": self.message}});
        if let Some(detail) = self.detail {
            body["execution"] = detail;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<SubmitError> for ApiError {
    fn from(e: SubmitError) -> Self {
        match e {
            SubmitError::BadImage(m) => Self::new(StatusCode::BAD_REQUEST, "BadImage", m),
            SubmitError::BadConfig(m) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "BadConfig", m)
            }
            SubmitError::Store(e) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
            }
        }
    }
}

impl From<PrintError> for ApiError {
    fn from(e: PrintError) -> Self {
        match e {
            PrintError::NotFound(id) => Self::not_found(format!("no job {id}")),
            PrintError::NotReady(_) => Self::new(StatusCode::CONFLICT, "NotReady", e.to_string()),
            PrintError::NoErrorStencil(_) => {
                Self::new(StatusCode::CONFLICT, "NotFailed", e.to_string())
            }
            PrintError::DeviceWrite(m) => Self::new(StatusCode::SERVICE_UNAVAILABLE, "E-DEV", m),
            PrintError::Device(ref exec) => {
                let mut err = Self::new(StatusCode::SERVICE_UNAVAILABLE, "E-DEV", e.to_string());
                err.detail = serde_json::to_value(exec).ok();
                err
            }
            PrintError::Store(e) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
            }
        }
    }
}

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/v1/healthz", get(healthz))
        .route("/v1/jobs", post(submit).get(list))
        .route("/v1/jobs/{id}", get(job))
        .route("/v1/jobs/{id}/stencils/{file}", get(stencil))
        .route("/v1/jobs/{id}/frames/{file}", get(frame))
        .route("/v1/jobs/{id}/print", post(print))
        .route("/v1/jobs/{id}/print-error", post(print_error))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(service)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn submit(
    State(service): State<Service>,
    mut multipart: Multipart,
) -> Result<Response, ApiError> {
    let mut image = None;
    let mut options = JobOptions::default();
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.to_string()))?
    {
        match field.name() {
            Some("image") => {
                let bytes = field.bytes().await.map_err(|e| {
                    ApiError::new(StatusCode::BAD_REQUEST, "BadImage", e.to_string())
                })?;
                image = Some(bytes);
            }
            Some("options") => {
                let text = field.text().await.map_err(|e| {
                    ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.to_string())
                })?;
                if !text.trim().is_empty() {
                    options = serde_json::from_str(&text).map_err(|e| {
                        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "BadConfig", e.to_string())
                    })?;
                }
            }
            _ => {}
        }
    }
    let image = image
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "BadImage", "missing image field"))?;

    let svc = service.clone();
    let (job, fresh) = tokio::task::spawn_blocking(move || svc.submit(&image, &options))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
        })??;
    let status = if fresh {
        StatusCode::ACCEPTED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(job)).into_response())
}

async fn list(State(service): State<Service>) -> Json<Vec<PrintJob>> {
    Json(service.store().list())
}

async fn job(
    State(service): State<Service>,
    Path(id): Path<String>,
) -> Result<Json<PrintJob>, ApiError> {
    service
        .store()
        .get(&id)
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no job {id}")))
}

async fn stencil(
    State(service): State<Service>,
    Path((id, file)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    serve_artifact(&service, &id, &file, "png", "image/png").await
}

async fn frame(
    State(service): State<Service>,
    Path((id, file)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    serve_artifact(&service, &id, &file, "escpos", "application/octet-stream").await
}

async fn serve_artifact(
    service: &Service,
    id: &str,
    file: &str,
    ext: &str,
    content_type: &'static str,
) -> Result<Response, ApiError> {
    let job = service
        .store()
        .get(id)
        .ok_or_else(|| ApiError::not_found(format!("no job {id}")))?;
    let stem = file
        .strip_suffix(&format!(".{ext}"))
        .filter(|s| matches!(*s, "c" | "m" | "y" | "k" | "error"))
        .ok_or_else(|| ApiError::not_found(format!("no artifact {file}")))?;
    let listed = job.artifacts.all().contains(&file);
    let path = service
        .store()
        .artifact_path(id, &format!("{stem}.{ext}"))
        .filter(|_| listed)
        .ok_or_else(|| ApiError::not_found(format!("{file} is not available for job {id}")))?;
    let bytes = tokio::fs::read(path)
        .await
        .map_err(|e| ApiError::not_found(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

async fn print(
    State(service): State<Service>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let exec = service.print(&id).await?;
    Ok(Json(exec).into_response())
}

/// Runs the job service until ctrl-c.
pub async fn serve(settings: Settings) -> std::io::Result<()> {
    let printer = PrinterSession::new(open_device(&settings.service.printer_device));
    let service =
        Service::start(&settings, printer, Faults::default()).map_err(std::io::Error::other)?;
    let listener = TcpListener::bind(&settings.service.bind_addr).await?;
    info!(addr = %listener.local_addr()?, "job service listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown_signal())
        .await
}

/// Runs the stand-in stylizer until ctrl-c.
pub async fn serve_stylizer(bind: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(bind).await?;
    info!(addr = %listener.local_addr()?, "stub stylizer listening");
    axum::serve(listener, stub_router())
        .with_graceful_shutdown(shutdown_signal())
        .await
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn print_error(
    State(service): State<Service>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let frame = service.print_error(&id).await?;
    Ok(Json(frame).into_response())
}
