//! HTTP service for the annotation study.
//!
//! Responses are appended to a JSONL log through a single writer and synced
//! to disk before the request is acknowledged. On start the log is
//! replayed, so every acknowledged record survives a restart.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use divcap_core::survey::{aggregate, validate_answers, ResponseRecord, SurveyDoc, SurveyKey};
use serde::Serialize;
use serde_json::json;

use crate::io::{append_line_durable, to_json_pretty, IoError};

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

/// Append-only response log with at most one record per annotator and item.
pub struct ResponseLog {
    path: PathBuf,
    writer: Mutex<File>,
    records: RwLock<Vec<ResponseRecord>>,
    index: Mutex<HashSet<(String, u32, String)>>,
}

fn dedup_key(r: &ResponseRecord) -> (String, u32, String) {
    (r.annotator_id.clone(), r.version_id, r.item_id.clone())
}

#[derive(Debug, PartialEq, Eq)]
pub enum AppendOutcome {
    Stored { seq: usize },
    Duplicate,
}

impl ResponseLog {
    /// Opens or creates the log and replays it. A torn final line (a write
    /// that never reached its acknowledgment) is cut off.
    pub fn open(path: &Path) -> Result<Self, LogError> {
        let fs_err = |e| IoError::Fs { path: path.to_path_buf(), source: e };
        let mut records = Vec::new();
        let mut index = HashSet::new();
        let mut keep_bytes = 0u64;
        if path.exists() {
            let f = File::open(path).map_err(fs_err)?;
            let mut reader = BufReader::new(f);
            let mut line = String::new();
            let mut n = 0;
            loop {
                line.clear();
                let read = reader.read_line(&mut line).map_err(fs_err)?;
                if read == 0 {
                    break;
                }
                n += 1;
                let complete = line.ends_with('\n');
                if line.trim().is_empty() {
                    keep_bytes += read as u64;
                    continue;
                }
                if !complete {
                    // acknowledgments follow the newline, so this record was never acked
                    log::warn!("{}:{n}: dropping torn final line", path.display());
                    break;
                }
                let r: ResponseRecord = serde_json::from_str(line.trim_end())
                    .map_err(|e| LogError::Corrupt { path: path.to_path_buf(), line: n, message: e.to_string() })?;
                keep_bytes += read as u64;
                if index.insert(dedup_key(&r)) {
                    records.push(r);
                } else {
                    log::warn!("{}:{n}: duplicate record ignored", path.display());
                }
            }
        }
        let writer = OpenOptions::new().create(true).append(true).open(path).map_err(fs_err)?;
        if writer.metadata().map_err(fs_err)?.len() > keep_bytes {
            writer.set_len(keep_bytes).map_err(fs_err)?;
        }
        Ok(ResponseLog {
            path: path.to_path_buf(),
            writer: Mutex::new(writer),
            records: RwLock::new(records),
            index: Mutex::new(index),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Durably appends `record` unless the annotator already answered the
    /// item.
    pub fn append(&self, record: ResponseRecord) -> Result<AppendOutcome, IoError> {
        let mut writer = self.writer.lock().unwrap();
        let mut index = self.index.lock().unwrap();
        let key = dedup_key(&record);
        if index.contains(&key) {
            return Ok(AppendOutcome::Duplicate);
        }
        let line = serde_json::to_vec(&record).expect("serializable record");
        append_line_durable(&mut writer, &line).map_err(|e| IoError::Fs { path: self.path.clone(), source: e })?;
        index.insert(key);
        let mut records = self.records.write().unwrap();
        records.push(record);
        Ok(AppendOutcome::Stored { seq: records.len() })
    }

    pub fn snapshot(&self) -> Vec<ResponseRecord> {
        self.records.read().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct AppState {
    pub surveys: BTreeMap<u32, SurveyDoc>,
    pub keys: Option<Vec<SurveyKey>>,
    pub log: ResponseLog,
}

impl AppState {
    pub fn new(surveys: Vec<SurveyDoc>, keys: Option<Vec<SurveyKey>>, log: ResponseLog) -> Self {
        AppState {
            surveys: surveys.into_iter().map(|d| (d.version_id, d)).collect(),
            keys,
            log,
        }
    }

    /// The report served by the aggregate endpoint, as pretty JSON with a
    /// trailing newline. Identical to the CLI's output for the same log.
    pub fn aggregate_json(&self) -> Option<Result<String, String>> {
        let keys = self.keys.as_ref()?;
        let docs: Vec<SurveyDoc> = self.surveys.values().cloned().collect();
        Some(
            aggregate(&self.log.snapshot(), &docs, keys)
                .map(|r| to_json_pretty(&r))
                .map_err(|e| e.to_string()),
        )
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    #[derive(Serialize)]
    struct ErrorBody {
        error: String,
    }
    json_response(status, to_json_pretty(&ErrorBody { error: message.into() }))
}

async fn healthz() -> Response {
    json_response(StatusCode::OK, json!({"status": "ok"}).to_string())
}

async fn get_survey(State(state): State<Arc<AppState>>, UrlPath(version): UrlPath<String>) -> Response {
    let doc = version.parse::<u32>().ok().and_then(|v| state.surveys.get(&v));
    match doc {
        Some(d) => json_response(StatusCode::OK, to_json_pretty(d)),
        None => error(StatusCode::NOT_FOUND, format!("unknown survey version {version:?}")),
    }
}

fn now_millis() -> String {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis().to_string())
        .unwrap_or_default()
}

async fn post_response(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let mut record: ResponseRecord = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid response body: {e}")),
    };
    if record.annotator_id.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "annotator_id must not be empty");
    }
    let item = state
        .surveys
        .get(&record.version_id)
        .and_then(|d| d.items.iter().find(|i| i.item_id == record.item_id));
    let Some(item) = item else {
        return error(
            StatusCode::NOT_FOUND,
            format!("unknown item {:?} in version {}", record.item_id, record.version_id),
        );
    };
    if let Err(e) = validate_answers(item, &record.answers) {
        return error(StatusCode::BAD_REQUEST, e.to_string());
    }
    if record.timestamp.is_empty() {
        record.timestamp = now_millis();
    }
    let ack = json!({
        "status": "stored",
        "annotator_id": record.annotator_id,
        "version_id": record.version_id,
        "item_id": record.item_id,
    });
    match state.log.append(record) {
        Ok(AppendOutcome::Stored { seq }) => {
            let mut ack = ack;
            ack["seq"] = json!(seq);
            json_response(StatusCode::CREATED, ack.to_string())
        }
        Ok(AppendOutcome::Duplicate) => error(StatusCode::CONFLICT, "this annotator already answered this item"),
        Err(e) => {
            log::error!("{e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, "could not persist the response")
        }
    }
}

async fn get_aggregate(State(state): State<Arc<AppState>>) -> Response {
    match state.aggregate_json() {
        None => error(StatusCode::CONFLICT, "the server was started without survey keys"),
        Some(Ok(body)) => json_response(StatusCode::OK, body),
        Some(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

/// Routes of the service, optionally serving a static web app at `/`.
pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/surveys/{version}", get(get_survey))
        .route("/api/responses", post(post_response))
        .route("/api/aggregate", get(get_aggregate))
        .route("/healthz", get(healthz))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(addr: std::net::SocketAddr, state: Arc<AppState>, static_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let app = router(state, static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
