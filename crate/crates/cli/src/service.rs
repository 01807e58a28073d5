//! Session-oriented HTTP API.
//!
//! Sessions live in memory; every state change is also appended to a
//! JSON-lines log when one is configured.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use iqa_core::{Decision, Engine, EngineError, InteractiveMode, SessionState};
use parking_lot::{Mutex, RwLock};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::view::{session_view, SessionView, SkipReason, ViewContext};

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// 128 random bits, URL-safe base64 without padding.
pub fn new_session_id() -> String {
    let bytes: [u8; 16] = rand::rng().random();
    URL_SAFE_NO_PAD.encode(bytes)
}

pub struct SessionRecord {
    pub id: String,
    pub mode: InteractiveMode,
    pub state: SessionState,
    pub created_ms: u64,
    pub updated_ms: u64,
    pub rating: Option<u8>,
    pub skip_reason: Option<SkipReason>,
}

/// Append-only JSON-lines event log.
pub struct SessionLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl SessionLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_owned(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn append(&self, event: &Value) {
        let mut line = event.to_string();
        line.push('\n');
        if let Err(e) = self.file.lock().write_all(line.as_bytes()) {
            tracing::warn!("session log write failed: {e}");
        }
    }
}

pub struct AppState {
    engine: Arc<Engine>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionRecord>>>>,
    log: Option<SessionLog>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, log: Option<SessionLog>) -> Self {
        Self {
            engine,
            sessions: RwLock::new(HashMap::new()),
            log,
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionRecord>>, ApiError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }

    fn view(&self, record: &SessionRecord) -> SessionView {
        session_view(
            self.engine.kg(),
            &record.state,
            ViewContext {
                session_id: &record.id,
                mode: record.mode,
                skip_reason: record.skip_reason,
                rating: record.rating,
            },
        )
    }

    fn log(&self, event: &str, record: &SessionRecord, extra: Value) {
        let Some(log) = &self.log else {
            return;
        };
        let mut entry = json!({
            "event": event,
            "session": record.id,
            "at_ms": record.updated_ms,
            "status": record.state.status().name(),
            "interactions_used": record.state.interactions_used(),
            "qis_size": record.state.qis().len(),
        });
        if let (Value::Object(map), Value::Object(more)) = (&mut entry, extra) {
            map.extend(more);
        }
        log.append(&entry);
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        Self::bad_request(rejection.body_text())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidState(_) => Self::conflict(e.to_string()),
            EngineError::OptionNotFound(_) => Self::not_found(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = State<Arc<AppState>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub omega: Option<u32>,
    pub max_interactions: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub question: String,
    #[serde(default = "default_mode")]
    pub mode: InteractiveMode,
    pub config: Option<ConfigOverrides>,
}

fn default_mode() -> InteractiveMode {
    InteractiveMode::Og
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feedback {
    pub option_id: String,
    pub decision: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Skip {
    pub reason: SkipReason,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rating {
    pub rating: i64,
}

#[derive(Debug, Serialize)]
pub struct RatingAck {
    pub session_id: String,
    pub rating: u8,
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(
    State(app): Shared,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let Json(body) = body?;
    if body.question.trim().is_empty() {
        return Err(ApiError::bad_request("question must not be empty"));
    }
    let mut settings = app.engine.settings(body.mode);
    if let Some(overrides) = &body.config {
        if let Some(omega) = overrides.omega {
            settings.omega = body.mode.omega(omega);
        }
        if let Some(max) = overrides.max_interactions {
            if max == 0 {
                return Err(ApiError::bad_request("max_interactions must be positive"));
            }
            settings.max_interactions = max;
        }
    }
    let run = app.engine.run(&body.question);
    let state = SessionState::new(run.question, run.qis, app.engine.kg(), settings);
    let now = now_ms();
    let record = SessionRecord {
        id: new_session_id(),
        mode: body.mode,
        state,
        created_ms: now,
        updated_ms: now,
        rating: None,
        skip_reason: None,
    };
    let view = app.view(&record);
    app.log(
        "created",
        &record,
        json!({ "question": body.question, "mode": body.mode, "omega": settings.omega }),
    );
    app.sessions
        .write()
        .insert(record.id.clone(), Arc::new(Mutex::new(record)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(app): Shared, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionView>> {
    let session = app.session(&id)?;
    let record = session.lock();
    Ok(Json(app.view(&record)))
}

async fn submit_feedback(
    State(app): Shared,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<Feedback>, JsonRejection>,
) -> ApiResult<Json<SessionView>> {
    let Json(body) = body?;
    let decision = Decision::from_wire(&body.decision).ok_or_else(|| {
        ApiError::bad_request(format!(
            "unknown decision `{}` (expected accept, reject, unknown or accept_query)",
            body.decision
        ))
    })?;
    let session = app.session(&id)?;
    let mut record = session.lock();
    record.state.apply_feedback(&body.option_id, decision)?;
    record.updated_ms = now_ms();
    let last = record.state.history().last().map(|h| h.option_id.clone());
    app.log(
        "feedback",
        &record,
        json!({ "option_id": last, "decision": decision.as_str() }),
    );
    Ok(Json(app.view(&record)))
}

async fn skip_session(
    State(app): Shared,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<Skip>, JsonRejection>,
) -> ApiResult<Json<SessionView>> {
    let Json(body) = body?;
    let session = app.session(&id)?;
    let mut record = session.lock();
    if !record.state.is_terminated() {
        record.state.terminate();
        record.skip_reason = Some(body.reason);
        record.updated_ms = now_ms();
        app.log("skipped", &record, json!({ "reason": body.reason }));
    }
    Ok(Json(app.view(&record)))
}

async fn rate_session(
    State(app): Shared,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<Rating>, JsonRejection>,
) -> ApiResult<Json<RatingAck>> {
    let Json(body) = body?;
    let rating = u8::try_from(body.rating)
        .ok()
        .filter(|r| (1..=5).contains(r))
        .ok_or_else(|| ApiError::bad_request("rating must be an integer from 1 to 5"))?;
    let session = app.session(&id)?;
    let mut record = session.lock();
    if !record.state.is_terminated() {
        return Err(ApiError::conflict("session is still running; rate it after it ends"));
    }
    record.rating = Some(rating);
    record.updated_ms = now_ms();
    app.log("rated", &record, json!({ "rating": rating }));
    Ok(Json(RatingAck {
        session_id: record.id.clone(),
        rating,
    }))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/feedback", post(submit_feedback))
        .route("/sessions/{id}/skip", post(skip_session))
        .route("/sessions/{id}/rating", post(rate_session))
        .with_state(app)
}
