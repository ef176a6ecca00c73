//! HTTP v1 routes.

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toonforge_core::canonical;
use tower_http::cors::CorsLayer;

use crate::edit::EditOp;
use crate::service::{parse_params, Service, ServiceError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub text: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRequest {
    pub ops: Vec<EditOp>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipRequest {
    pub visemes: String,
}

#[derive(Debug, Serialize)]
struct IdResponse {
    id: String,
}

#[derive(Debug, Serialize)]
struct ClipResponse {
    clip_id: String,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

#[derive(Debug, Deserialize)]
pub struct FrameQuery {
    #[serde(default)]
    params: String,
    width: Option<u32>,
    height: Option<u32>,
}

#[derive(Debug, Deserialize)]
pub struct FramesQuery {
    fps: f64,
    width: Option<u32>,
    height: Option<u32>,
}

fn viewport(w: Option<u32>, h: Option<u32>) -> Option<(u32, u32)> {
    match (w, h) {
        (Some(w), Some(h)) => Some((w, h)),
        (Some(s), None) | (None, Some(s)) => Some((s, s)),
        (None, None) => None,
    }
}

pub struct ApiError(StatusCode, String);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Pipeline(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = canonical::to_string(&ErrorBody { error: self.1 }).unwrap_or_default();
        (self.0, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

fn json<T: Serialize>(value: &T) -> Response {
    match canonical::to_string(value) {
        Ok(body) => ([(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text = std::str::from_utf8(body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    canonical::from_str(text).map_err(|e| {
        // Shape errors inside ops are the client's invalid op, not bad JSON.
        let status = if e.is_data() { StatusCode::UNPROCESSABLE_ENTITY } else { StatusCode::BAD_REQUEST };
        ApiError(status, e.to_string())
    })
}

/// Run CPU-heavy work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn create(State(svc): State<Service>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let id = blocking(move || svc.create(&req.text, req.seed)).await?;
    Ok((StatusCode::CREATED, json(&IdResponse { id })).into_response())
}

async fn model(State(svc): State<Service>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let zip = blocking(move || svc.model_zip(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/zip")], zip).into_response())
}

async fn edits(State(svc): State<Service>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: EditRequest = parse_body(&body)?;
    let id = blocking(move || svc.edit(&id, &req.ops)).await?;
    Ok((StatusCode::CREATED, json(&IdResponse { id })).into_response())
}

async fn frame(State(svc): State<Service>, Path(id): Path<String>, Query(q): Query<FrameQuery>) -> Result<Response, ApiError> {
    let values = parse_params(&q.params)?;
    let vp = viewport(q.width, q.height);
    let png = blocking(move || svc.frame(&id, &values, vp)).await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn create_clip(State(svc): State<Service>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: ClipRequest = parse_body(&body)?;
    let clip_id = blocking(move || svc.create_clip(&id, &req.visemes)).await?;
    Ok((StatusCode::CREATED, json(&ClipResponse { clip_id })).into_response())
}

async fn clip_frames(State(svc): State<Service>, Path(id): Path<String>, Query(q): Query<FramesQuery>) -> Result<Response, ApiError> {
    let vp = viewport(q.width, q.height);
    let zip = blocking(move || svc.clip_frames(&id, q.fps, vp)).await?;
    Ok(([(header::CONTENT_TYPE, "application/zip")], zip).into_response())
}

pub fn router(svc: Service) -> Router {
    Router::new()
        .route("/v1/characters", post(create))
        .route("/v1/characters/{id}/model", get(model))
        .route("/v1/characters/{id}/edits", post(edits))
        .route("/v1/characters/{id}/frame", get(frame))
        .route("/v1/characters/{id}/clips", post(create_clip))
        .route("/v1/clips/{clip_id}/frames", get(clip_frames))
        .layer(CorsLayer::permissive())
        .with_state(svc)
}
