//! HTTP service. Sessions live in memory; each is locked for the duration
//! of a turn so turns of one session apply in submission order, while the
//! engine serializes KB writes across sessions.
//!
//! | method | path                         | body / result                      |
//! |--------|------------------------------|------------------------------------|
//! | POST   | /sessions                    | 201 `{session_id, kb_version}`     |
//! | POST   | /sessions/{id}/turns         | `{text, expected_kb_version?}` → agent turns |
//! | GET    | /sessions/{id}/transcript    | all turns of the session           |
//! | DELETE | /sessions/{id}               | 204                                |
//! | GET    | /kb                          | KB summary                         |
//! | GET    | /kb/download                 | the KB file                        |
//! | GET    | /health                      | `{status, kb_version}`             |

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nlcmd_core::agent::system_now_ms;
use nlcmd_core::dialogue::{close_session, DialogueError, SessionState};
use nlcmd_core::learner::CommitOutcome;
use nlcmd_core::{save_kb, Engine, KbSummary, WireTurn};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::files::save_kb_file;
use crate::CliError;

pub struct AppState {
    pub engine: Engine,
    sessions: std::sync::Mutex<HashMap<String, Arc<Mutex<SessionState>>>>,
    pub save_path: Option<PathBuf>,
}

impl AppState {
    pub fn new(engine: Engine, save_path: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState {
            engine,
            sessions: std::sync::Mutex::new(HashMap::new()),
            save_path,
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session `{id}`")))
    }

    /// Writes the KB if it changed since the last save.
    pub fn save_if_dirty(&self) -> Result<bool, CliError> {
        match &self.save_path {
            Some(p) if self.engine.take_dirty() => {
                save_kb_file(p, &self.engine.snapshot())?;
                Ok(true)
            }
            _ => Ok(false),
        }
    }
}

#[derive(Debug, Serialize)]
struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    error: String,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        ApiError {
            status,
            error: error.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

impl From<DialogueError> for ApiError {
    fn from(e: DialogueError) -> Self {
        let status = match e {
            DialogueError::SessionClosed(_) => StatusCode::GONE,
            DialogueError::InvalidOptionIndex { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub kb_version: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnRequest {
    pub text: String,
    /// Reject the turn with 409 unless the KB is still at this version.
    #[serde(default)]
    pub expected_kb_version: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnResponse {
    pub turns: Vec<WireTurn>,
    pub kb_version: u64,
    #[serde(default)]
    pub learned: Option<CommitOutcome>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub turns: Vec<WireTurn>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/turns", post(post_turn))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/kb", get(kb_summary))
        .route("/kb/download", get(kb_download))
        .route("/health", get(health))
        .with_state(state)
}

async fn create_session(State(app): State<Arc<AppState>>) -> (StatusCode, Json<SessionCreated>) {
    let s = app.engine.new_session();
    let created = SessionCreated {
        session_id: s.session_id.clone(),
        kb_version: s.kb_version,
    };
    app.sessions
        .lock()
        .expect("session map poisoned")
        .insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
    (StatusCode::CREATED, Json(created))
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let session = app.session(&id)?;
    close_session(&mut *session.lock().await);
    app.sessions.lock().expect("session map poisoned").remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

fn wire_turns(s: &SessionState, from: usize) -> Vec<WireTurn> {
    s.transcript[from..]
        .iter()
        .map(|t| WireTurn {
            session_id: s.session_id.clone(),
            seq: t.seq,
            sender: t.sender,
            body: t.body.clone(),
        })
        .collect()
}

async fn post_turn(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<TurnRequest>,
) -> Result<Json<TurnResponse>, ApiError> {
    let session = app.session(&id)?;
    let mut s = session.lock().await;
    if let Some(expected) = req.expected_kb_version {
        let current = app.engine.snapshot().version();
        if expected != current {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("kb is at version {current}, expected {expected}"),
            ));
        }
    }
    let before = s.transcript.len();
    let report = app.engine.turn(&mut s, &req.text, system_now_ms())?;
    let turns = wire_turns(&s, before)
        .into_iter()
        .filter(|t| t.sender == nlcmd_core::Sender::Agent)
        .collect();
    Ok(Json(TurnResponse {
        turns,
        kb_version: report.kb_version,
        learned: report.commit,
    }))
}

async fn transcript(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Transcript>, ApiError> {
    let session = app.session(&id)?;
    let s = session.lock().await;
    Ok(Json(Transcript {
        session_id: id,
        turns: wire_turns(&s, 0),
    }))
}

async fn kb_summary(State(app): State<Arc<AppState>>) -> Json<KbSummary> {
    Json(app.engine.snapshot().summary())
}

async fn kb_download(State(app): State<Arc<AppState>>) -> impl IntoResponse {
    (
        [
            (header::CONTENT_TYPE, "application/json"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"kb.json\""),
        ],
        save_kb(&app.engine.snapshot()),
    )
}

async fn health(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "kb_version": app.engine.snapshot().version() }))
}

/// Serves until Ctrl-C, autosaving every `autosave_secs` (if nonzero) and
/// saving once more on the way out.
pub async fn serve(app: Arc<AppState>, port: u16) -> Result<(), CliError> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
        .await
        .map_err(|e| CliError::Runtime(format!("cannot bind port {port}: {e}")))?;
    let addr = listener
        .local_addr()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    eprintln!("listening on http://{addr}");

    let secs = app.engine.config().autosave_secs;
    if secs > 0 && app.save_path.is_some() {
        let saver = app.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(secs));
            loop {
                tick.tick().await;
                if let Err(e) = saver.save_if_dirty() {
                    eprintln!("autosave failed: {e}");
                }
            }
        });
    }

    axum::serve(listener, router(app.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    app.save_if_dirty()?;
    Ok(())
}
