//! HTTP surface of the report engine.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/analyze` | multipart: `audio` (WAV), `transcript` | `{"report_id": ...}` |
//! | GET | `/reports` | | summaries |
//! | GET | `/reports/{id}` | | report JSON |
//! | POST | `/reports/{id}/reanalyze` | Thresholds JSON | report JSON |
//! | GET | `/reports/{id}/alignment.svg` | | SVG |
//! | POST | `/reports/{id}/verdicts` | `{"event_id", "verdict", "annotator"}` | report JSON |
//!
//! Mutating endpoints accept an optional `expected_version` (query parameter
//! for reanalyze, body field for verdicts) and answer 409 when it is stale.
//! Errors are JSON objects `{"error", "message"}` plus `"stage"` (422) or
//! `"field"` (400) when known.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::alignment::PhonemeInventory;
use crate::classifier::Thresholds;
use crate::frontend::load_audio_bytes;
use crate::report::{AnalysisConfig, Analyzer, ReportEngine, ReportError, ReportStore, Stage, VerdictKind};
use crate::temporal::WeightBundle;

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Service configuration file. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub store_dir: PathBuf,
    /// Default thresholds; built-in defaults when absent.
    #[serde(default)]
    pub thresholds: Option<PathBuf>,
    /// Phoneme inventory; the built-in demo inventory when absent.
    #[serde(default)]
    pub inventory: Option<PathBuf>,
    /// Analysis config (frontend, calibration, decoder); defaults when absent.
    #[serde(default)]
    pub analysis: Option<PathBuf>,
    /// Temporal weight bundle for open-set scoring.
    #[serde(default)]
    pub weights: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let err = |message: String| ServiceError::Config {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut cfg: ServiceConfig = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.store_dir);
        for p in [&mut cfg.thresholds, &mut cfg.inventory, &mut cfg.analysis, &mut cfg.weights]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Builds the engine this config describes.
    pub fn engine(&self) -> Result<ReportEngine, ServiceError> {
        let cfg_err = |p: &Path, e: &dyn std::fmt::Display| ServiceError::Config {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        let inventory = match &self.inventory {
            Some(p) => PhonemeInventory::load(p).map_err(|e| cfg_err(p, &e))?,
            None => PhonemeInventory::demo(),
        };
        let mut analysis = match &self.analysis {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| cfg_err(p, &e))?;
                serde_json::from_str::<AnalysisConfig>(&text).map_err(|e| cfg_err(p, &e))?
            }
            None => AnalysisConfig::default(),
        };
        if let Some(p) = &self.thresholds {
            analysis.thresholds = Thresholds::load(p).map_err(|e| cfg_err(p, &e))?;
        }
        let mut analyzer = Analyzer::new(inventory, analysis);
        if let Some(p) = &self.weights {
            let w = WeightBundle::load(p).map_err(|e| cfg_err(p, &e))?;
            analyzer = analyzer.with_weights(&w).map_err(|e| cfg_err(p, &e))?;
        }
        let store = ReportStore::open(&self.store_dir).map_err(|e| cfg_err(&self.store_dir, &e))?;
        Ok(ReportEngine::new(analyzer, store))
    }
}

/// JSON error body with its status code.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn bad_request(field: Option<&str>, message: impl Into<String>) -> Self {
        let mut body = json!({"error": "malformed", "message": message.into()});
        if let Some(f) = field {
            body["field"] = json!(f);
        }
        Self {
            status: StatusCode::BAD_REQUEST,
            body,
        }
    }

    fn stage(stage: Stage, message: String) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({"error": "pipeline", "stage": stage.as_str(), "message": message}),
        }
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        if let Some(stage) = e.stage() {
            return ApiError::stage(stage, e.to_string());
        }
        let (status, kind) = match &e {
            ReportError::UnknownReport(_) => (StatusCode::NOT_FOUND, "unknown_report"),
            ReportError::UnknownEvent { .. } => (StatusCode::NOT_FOUND, "unknown_event"),
            ReportError::StaleVersion { .. } => (StatusCode::CONFLICT, "stale_version"),
            ReportError::Thresholds(t) => return ApiError::bad_request(t.field(), t.to_string()),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let mut body = json!({"error": kind, "message": e.to_string()});
        if let ReportError::StaleVersion { current, .. } = e {
            body["current_version"] = json!(current);
        }
        ApiError { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Shared = Arc<ReportEngine>;

fn json_body(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ReportError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({"error": "internal", "message": e.to_string()}),
        }),
    }
}

async fn analyze(State(engine): State<Shared>, multipart: Result<Multipart, axum::extract::multipart::MultipartRejection>) -> Result<Response, ApiError> {
    let mut multipart = multipart.map_err(|e| ApiError::bad_request(None, e.body_text()))?;
    let (mut audio, mut transcript, mut filename) = (None, None, None);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(None, e.body_text()))?
    {
        match field.name() {
            Some("audio") => {
                filename = field.file_name().map(str::to_string);
                let bytes = field
                    .bytes()
                    .await
                    .map_err(|e| ApiError::bad_request(Some("audio"), e.body_text()))?;
                audio = Some(bytes);
            }
            Some("transcript") => {
                let text = field
                    .text()
                    .await
                    .map_err(|e| ApiError::bad_request(Some("transcript"), e.body_text()))?;
                transcript = Some(text);
            }
            Some(other) => {
                return Err(ApiError::bad_request(Some(other), format!("unexpected field {other:?}")));
            }
            None => return Err(ApiError::bad_request(None, "unnamed multipart field")),
        }
    }
    let audio = audio.ok_or_else(|| ApiError::bad_request(Some("audio"), "missing field"))?;
    let transcript = transcript.ok_or_else(|| ApiError::bad_request(Some("transcript"), "missing field"))?;
    let name = filename.unwrap_or_else(|| "upload.wav".to_string());
    let report = blocking(move || {
        let buf = load_audio_bytes(&audio).map_err(|source| ReportError::Frontend {
            stage: Stage::Audio,
            source,
        })?;
        engine.analyze(&buf, &name, &transcript)
    })
    .await?;
    Ok(Json(json!({"report_id": report.report_id})).into_response())
}

async fn list(State(engine): State<Shared>) -> Result<Response, ApiError> {
    let items = blocking(move || engine.list()).await?;
    Ok(Json(items).into_response())
}

async fn get_report(State(engine): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let text = blocking(move || engine.store().load_json(&id)).await?;
    Ok(json_body(text))
}

async fn get_svg(State(engine): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let svg = blocking(move || engine.svg(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VersionQuery {
    expected_version: Option<u64>,
}

async fn reanalyze(
    State(engine): State<Shared>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<VersionQuery>, axum::extract::rejection::QueryRejection>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(Some("expected_version"), e.body_text()))?;
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::bad_request(None, e.to_string()))?;
    let th = Thresholds::from_json(text).map_err(|e| ApiError::bad_request(e.field(), e.to_string()))?;
    let report = blocking(move || engine.reanalyze(&id, &th, q.expected_version)).await?;
    Ok(json_body(report.to_canonical_json()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictRequest {
    event_id: String,
    verdict: VerdictKind,
    annotator: String,
    #[serde(default)]
    expected_version: Option<u64>,
}

async fn verdict(State(engine): State<Shared>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: VerdictRequest = serde_json::from_slice(&body).map_err(|e| {
        let msg = e.to_string();
        let field = ["event_id", "verdict", "annotator", "expected_version"]
            .into_iter()
            .find(|f| msg.contains(&format!("`{f}`")));
        ApiError::bad_request(field, msg)
    })?;
    if req.annotator.trim().is_empty() {
        return Err(ApiError::bad_request(Some("annotator"), "must not be empty"));
    }
    let report = blocking(move || {
        engine.record_verdict(&id, &req.event_id, req.verdict, &req.annotator, req.expected_version)
    })
    .await?;
    Ok(json_body(report.to_canonical_json()))
}

pub fn router(engine: Arc<ReportEngine>) -> Router {
    Router::new()
        .route("/analyze", post(analyze))
        .route("/reports", get(list))
        .route("/reports/{id}", get(get_report))
        .route("/reports/{id}/reanalyze", post(reanalyze))
        .route("/reports/{id}/alignment.svg", get(get_svg))
        .route("/reports/{id}/verdicts", post(verdict))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(engine)
}

/// Binds `cfg.listen` and serves until interrupted.
pub async fn serve(cfg: &ServiceConfig) -> Result<(), ServiceError> {
    let engine = Arc::new(cfg.engine()?);
    let addr: SocketAddr = cfg.listen.parse().map_err(|e: std::net::AddrParseError| ServiceError::Config {
        path: "listen".into(),
        message: e.to_string(),
    })?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
