use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use goalcoach_core::{Backends, Session, SessionConfig};

use crate::error::ApiError;

pub struct ApiSession {
    pub session_id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub session: Session,
}

impl ApiSession {
    pub fn config(&self) -> &SessionConfig {
        self.session.config()
    }
}

/// Shared server state. Each session sits behind its own mutex, so requests
/// for one session are serialized while distinct sessions run concurrently.
#[derive(Clone)]
pub struct AppState {
    pub backends: Backends,
    /// When set, every request must carry this value in the token header.
    pub token: Option<String>,
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<ApiSession>>>>>,
}

impl AppState {
    pub fn new(backends: Backends) -> Self {
        AppState {
            backends,
            token: None,
            sessions: Default::default(),
        }
    }

    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }

    /// Register a session under a fresh id. Closed sessions stay registered,
    /// so an id is never handed out twice.
    pub fn insert(&self, make: impl FnOnce(&str) -> Result<ApiSession, ApiError>) -> Result<Arc<Mutex<ApiSession>>, ApiError> {
        let mut sessions = self.sessions.write().map_err(|_| ApiError::Internal("session table poisoned".into()))?;
        let id = loop {
            let id = uuid::Uuid::new_v4().simple().to_string();
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let s = Arc::new(Mutex::new(make(&id)?));
        sessions.insert(id, s.clone());
        Ok(s)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<ApiSession>>, ApiError> {
        let sessions = self.sessions.read().map_err(|_| ApiError::Internal("session table poisoned".into()))?;
        sessions.get(id).cloned().ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.sessions.read().map(|s| s.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
