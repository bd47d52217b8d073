use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AnalysisResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
    pub at: DateTime<Utc>,
}

/// Follow-up conversation bound to one analysis. Messages are only ever
/// appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatSession {
    pub id: String,
    pub analysis_id: String,
    pub messages: Vec<ChatMessage>,
}

/// One state change, as written to a journal and replayed on startup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StoreEvent {
    AnalysisStored {
        result: Box<AnalysisResult>,
    },
    SessionStarted {
        session_id: String,
        analysis_id: String,
        canonical: bool,
    },
    MessageAppended {
        session_id: String,
        message: ChatMessage,
    },
}

/// Receives every event after it has been applied. Implementations must
/// not call back into the store.
pub trait EventSink: Send + Sync {
    fn record(&self, event: &StoreEvent);
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("unknown analysis {0}")]
    UnknownAnalysis(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("message out of turn in session {0}")]
    OutOfTurn(String),
}

type SessionCell = Arc<Mutex<ChatSession>>;

/// In-memory analyses and chat sessions. Reads are concurrent; appends to a
/// session are serialised by that session's lock.
#[derive(Default)]
pub struct Store {
    analyses: RwLock<HashMap<String, Arc<AnalysisResult>>>,
    sessions: RwLock<HashMap<String, SessionCell>>,
    canonical: RwLock<HashMap<String, String>>,
    sink: Option<Arc<dyn EventSink>>,
}

pub(crate) fn new_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sink(sink: Arc<dyn EventSink>) -> Self {
        Self {
            sink: Some(sink),
            ..Self::default()
        }
    }

    fn emit(&self, event: StoreEvent) {
        if let Some(sink) = &self.sink {
            sink.record(&event);
        }
    }

    pub fn insert_analysis(&self, result: AnalysisResult) -> Result<Arc<AnalysisResult>, StoreError> {
        let shared = Arc::new(result);
        {
            let mut map = self.analyses.write().unwrap();
            if map.contains_key(&shared.id) {
                return Err(StoreError::DuplicateId(shared.id.clone()));
            }
            map.insert(shared.id.clone(), shared.clone());
        }
        self.emit(StoreEvent::AnalysisStored {
            result: Box::new((*shared).clone()),
        });
        Ok(shared)
    }

    pub fn analysis(&self, id: &str) -> Option<Arc<AnalysisResult>> {
        self.analyses.read().unwrap().get(id).cloned()
    }

    pub fn analysis_count(&self) -> usize {
        self.analyses.read().unwrap().len()
    }

    pub fn analysis_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.analyses.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn open_session(&self, analysis_id: &str, session_id: String, canonical: bool) -> Result<(), StoreError> {
        if !self.analyses.read().unwrap().contains_key(analysis_id) {
            return Err(StoreError::UnknownAnalysis(analysis_id.to_owned()));
        }
        let mut sessions = self.sessions.write().unwrap();
        if sessions.contains_key(&session_id) {
            return Err(StoreError::DuplicateId(session_id));
        }
        sessions.insert(
            session_id.clone(),
            Arc::new(Mutex::new(ChatSession {
                id: session_id.clone(),
                analysis_id: analysis_id.to_owned(),
                messages: Vec::new(),
            })),
        );
        drop(sessions);
        self.emit(StoreEvent::SessionStarted {
            session_id,
            analysis_id: analysis_id.to_owned(),
            canonical,
        });
        Ok(())
    }

    /// Opens a fresh, empty session on an analysis.
    pub fn start_session(&self, analysis_id: &str) -> Result<ChatSession, StoreError> {
        let id = new_id();
        self.open_session(analysis_id, id.clone(), false)?;
        Ok(self.session(&id).expect("just inserted"))
    }

    /// The single session used by the chat endpoint, created on first use.
    pub fn canonical_session(&self, analysis_id: &str) -> Result<String, StoreError> {
        if let Some(id) = self.canonical.read().unwrap().get(analysis_id) {
            return Ok(id.clone());
        }
        let mut canonical = self.canonical.write().unwrap();
        if let Some(id) = canonical.get(analysis_id) {
            return Ok(id.clone());
        }
        let id = new_id();
        self.open_session(analysis_id, id.clone(), true)?;
        canonical.insert(analysis_id.to_owned(), id.clone());
        Ok(id)
    }

    pub fn session(&self, id: &str) -> Option<ChatSession> {
        let cell = self.sessions.read().unwrap().get(id).cloned()?;
        let snapshot = cell.lock().unwrap().clone();
        Some(snapshot)
    }

    pub(crate) fn session_cell(&self, id: &str) -> Result<SessionCell, StoreError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(id.to_owned()))
    }

    /// Appends to a session whose lock the caller already holds.
    pub(crate) fn append_locked(&self, session: &mut ChatSession, message: ChatMessage) -> Result<(), StoreError> {
        let expected = if session.messages.len().is_multiple_of(2) {
            Role::User
        } else {
            Role::Assistant
        };
        if message.role != expected {
            return Err(StoreError::OutOfTurn(session.id.clone()));
        }
        session.messages.push(message.clone());
        self.emit(StoreEvent::MessageAppended {
            session_id: session.id.clone(),
            message,
        });
        Ok(())
    }

    /// Applies a journaled event without re-emitting it.
    pub fn replay(&self, event: StoreEvent) -> Result<(), StoreError> {
        match event {
            StoreEvent::AnalysisStored { result } => {
                let mut map = self.analyses.write().unwrap();
                if map.contains_key(&result.id) {
                    return Err(StoreError::DuplicateId(result.id));
                }
                map.insert(result.id.clone(), Arc::from(result));
            }
            StoreEvent::SessionStarted {
                session_id,
                analysis_id,
                canonical,
            } => {
                if !self.analyses.read().unwrap().contains_key(&analysis_id) {
                    return Err(StoreError::UnknownAnalysis(analysis_id));
                }
                let mut sessions = self.sessions.write().unwrap();
                if sessions.contains_key(&session_id) {
                    return Err(StoreError::DuplicateId(session_id));
                }
                sessions.insert(
                    session_id.clone(),
                    Arc::new(Mutex::new(ChatSession {
                        id: session_id.clone(),
                        analysis_id: analysis_id.clone(),
                        messages: Vec::new(),
                    })),
                );
                if canonical {
                    self.canonical.write().unwrap().insert(analysis_id, session_id);
                }
            }
            StoreEvent::MessageAppended { session_id, message } => {
                let cell = self.session_cell(&session_id)?;
                let mut session = cell.lock().unwrap();
                let expected = if session.messages.len().is_multiple_of(2) {
                    Role::User
                } else {
                    Role::Assistant
                };
                if message.role != expected {
                    return Err(StoreError::OutOfTurn(session_id));
                }
                session.messages.push(message);
            }
        }
        Ok(())
    }
}
