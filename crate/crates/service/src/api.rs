use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use goalcoach_core::orchestrator::TranscriptRecord;
use goalcoach_core::{
    BeliefState, DialogueTurn, GateConfig, GoalSnapshot, Mechanism, Session, SessionConfig, SnapshotPoint, Stage, TurnResult,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::state::{ApiSession, AppState};

/// Header carrying the shared access token, when one is configured.
pub const TOKEN_HEADER: &str = "x-coach-token";

/// Optional overrides for a new session; absent fields keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub week_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_emotions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanisms: Option<Vec<Mechanism>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_mechanism: Option<Mechanism>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CreateSession {
    pub fn config(&self) -> SessionConfig {
        let mut c = SessionConfig::default();
        let GateConfig { tau, top_n, .. } = c.gate.clone();
        c.gate = GateConfig {
            tau: self.tau.unwrap_or(tau),
            top_n: self.top_n.unwrap_or(top_n),
            allowed_emotions: self.allowed_emotions.clone(),
        };
        if let Some(m) = &self.mechanisms {
            c.mechanisms = m.clone();
        }
        if let Some(m) = self.default_mechanism {
            c.default_mechanism = m;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub week_id: String,
    pub created_at: u64,
    pub config: SessionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub week_id: String,
    pub created_at: u64,
    pub config: SessionConfig,
    pub closed: bool,
    pub stage: Stage,
    pub belief: BeliefState,
    pub turns: Vec<DialogueTurn>,
    pub snapshots: Vec<GoalSnapshot>,
}

impl SessionSummary {
    pub fn of(s: &ApiSession) -> Self {
        SessionSummary {
            session_id: s.session_id.clone(),
            week_id: s.session.week_id().to_string(),
            created_at: s.created_at,
            config: s.config().clone(),
            closed: s.session.is_closed(),
            stage: s.session.stage(),
            belief: s.session.belief().clone(),
            turns: s.session.turns().to_vec(),
            snapshots: s.session.snapshots().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageBody {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoachAck {
    pub session_id: String,
    pub recorded: bool,
    pub turn_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalPoint {
    #[default]
    Current,
    Forward,
    Backward,
}

#[derive(Debug, Deserialize)]
pub struct GoalQuery {
    #[serde(default)]
    pub point: GoalPoint,
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Malformed JSON is a 400; well-formed JSON of the wrong shape is a 422.
fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            ApiError::BadRequest(e.to_string())
        } else {
            ApiError::Unprocessable(e.to_string())
        }
    })
}

/// Run `f` on the locked session off the async executor.
async fn with_session<T: Send + 'static>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut ApiSession, &goalcoach_core::Backends) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let session = state.get(id)?;
    let backends = state.backends.clone();
    tokio::task::spawn_blocking(move || {
        let mut guard = session.lock().map_err(|_| ApiError::Internal("session lock poisoned".into()))?;
        f(&mut guard, &backends)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?
    };
    let config = req.config();
    config.validate().map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let week = req.week_id.clone();
    let session = state.insert(|id| {
        let session = Session::new(week.unwrap_or_else(|| id.to_string()), config).map_err(|e| ApiError::BadRequest(e.to_string()))?;
        Ok(ApiSession {
            session_id: id.to_string(),
            created_at: now(),
            session,
        })
    })?;
    let s = session.lock().map_err(|_| ApiError::Internal("session lock poisoned".into()))?;
    let created = SessionCreated {
        session_id: s.session_id.clone(),
        week_id: s.session.week_id().to_string(),
        created_at: s.created_at,
        config: s.config().clone(),
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionSummary>, ApiError> {
    with_session(&state, &id, |s, _| Ok(SessionSummary::of(s))).await.map(Json)
}

async fn patient_message(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<TurnResult>, ApiError> {
    state.get(&id)?;
    let msg: MessageBody = parse_body(&body)?;
    with_session(&state, &id, move |s, backends| {
        if s.session.is_closed() {
            return Err(ApiError::Conflict("session is closed".into()));
        }
        if msg.text.trim().is_empty() {
            return Err(ApiError::Unprocessable("text is empty".into()));
        }
        Ok(s.session.step(&msg.text, backends)?)
    })
    .await
    .map(Json)
}

async fn coach_message(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<CoachAck>, ApiError> {
    state.get(&id)?;
    let msg: MessageBody = parse_body(&body)?;
    with_session(&state, &id, move |s, _| {
        if msg.text.trim().is_empty() {
            return Err(ApiError::Unprocessable("text is empty".into()));
        }
        s.session.record_coach_message(&msg.text)?;
        Ok(CoachAck {
            session_id: s.session_id.clone(),
            recorded: true,
            turn_count: s.session.turns().len(),
        })
    })
    .await
    .map(Json)
}

async fn goal(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<GoalQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<BeliefState>, ApiError> {
    state.get(&id)?;
    let Query(q) = query.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    with_session(&state, &id, move |s, _| match q.point {
        GoalPoint::Current => Ok(s.session.belief().clone()),
        GoalPoint::Forward => Ok(s.session.snapshot_goal(SnapshotPoint::Forward)?.belief),
        GoalPoint::Backward => Ok(s.session.snapshot_goal(SnapshotPoint::Backward)?.belief),
    })
    .await
    .map(Json)
}

async fn close(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionSummary>, ApiError> {
    with_session(&state, &id, |s, _| {
        s.session.close()?;
        Ok(SessionSummary::of(s))
    })
    .await
    .map(Json)
}

async fn transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Vec<TranscriptRecord>>, ApiError> {
    with_session(&state, &id, |s, _| Ok(s.session.transcript().to_vec())).await.map(Json)
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], crate::OPENAPI).into_response()
}

async fn check_token(State(state): State<AppState>, req: Request, next: Next) -> Result<Response, ApiError> {
    if let Some(expected) = &state.token {
        let given = req.headers().get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(expected.as_str()) {
            return Err(ApiError::Unauthorized);
        }
    }
    Ok(next.run(req).await)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/patient-message", post(patient_message))
        .route("/sessions/{id}/coach-message", post(coach_message))
        .route("/sessions/{id}/goal", get(goal))
        .route("/sessions/{id}/close", post(close))
        .route("/sessions/{id}/transcript", get(transcript))
        .route_layer(middleware::from_fn_with_state(state.clone(), check_token))
        .route("/openapi.json", get(openapi))
        .with_state(state)
}
