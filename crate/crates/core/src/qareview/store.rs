//! Durable session storage: one JSON file per session, replaced atomically
//! before a mutation is acknowledged.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use super::session::{ReviewError, ReviewSession, SessionSummary};
use crate::io::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no session {0}")]
    NotFound(String),
    #[error("session {0} already exists")]
    Exists(String),
    #[error("invalid session id {0:?}")]
    BadId(String),
    #[error("revision conflict: expected {expected}, current {current}")]
    Conflict { expected: u64, current: u64 },
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error("{path}: {message}")]
    Corrupt { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_'))
}

/// Mutations on one session are serialized by its lock; readers get
/// snapshots.
pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<ReviewSession>>>>,
}

impl SessionStore {
    /// Loads every `*.json` session in `dir`, creating the directory if
    /// needed. Leftover temp files from an interrupted write are ignored.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        std::fs::create_dir_all(dir)?;
        let mut sessions = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let is_session = path.extension().is_some_and(|e| e == "json") && !path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
            if !is_session {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            let s: ReviewSession = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn persist(&self, s: &ReviewSession) -> Result<(), StoreError> {
        let mut bytes = serde_json::to_vec_pretty(s).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        write_atomic(&self.path_of(&s.session_id), &bytes)?;
        Ok(())
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<ReviewSession>>, StoreError> {
        self.sessions.read().expect("store lock").get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn create(&self, session: ReviewSession) -> Result<SessionSummary, StoreError> {
        if !valid_session_id(&session.session_id) {
            return Err(StoreError::BadId(session.session_id));
        }
        let mut map = self.sessions.write().expect("store lock");
        if map.contains_key(&session.session_id) {
            return Err(StoreError::Exists(session.session_id));
        }
        self.persist(&session)?;
        let summary = session.summary();
        map.insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
        Ok(summary)
    }

    /// Replaces a session (used by `--force` seeding).
    pub fn replace(&self, session: ReviewSession) -> Result<SessionSummary, StoreError> {
        if !valid_session_id(&session.session_id) {
            return Err(StoreError::BadId(session.session_id));
        }
        let mut map = self.sessions.write().expect("store lock");
        self.persist(&session)?;
        let summary = session.summary();
        map.insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
        Ok(summary)
    }

    pub fn list(&self) -> Vec<SessionSummary> {
        let handles: Vec<_> = self.sessions.read().expect("store lock").values().cloned().collect();
        handles.iter().map(|h| h.lock().expect("session lock").summary()).collect()
    }

    pub fn get(&self, id: &str) -> Result<ReviewSession, StoreError> {
        Ok(self.handle(id)?.lock().expect("session lock").clone())
    }

    /// Applies `f` to a copy of the session, persists the copy and only then
    /// swaps it in. A failing `f`, a stale `expected_revision` or a failed
    /// write leaves both memory and disk unchanged.
    pub fn mutate(
        &self,
        id: &str,
        expected_revision: Option<u64>,
        f: impl FnOnce(&mut ReviewSession) -> Result<(), ReviewError>,
    ) -> Result<ReviewSession, StoreError> {
        let handle = self.handle(id)?;
        let mut guard = handle.lock().expect("session lock");
        if let Some(expected) = expected_revision {
            if expected != guard.revision {
                return Err(StoreError::Conflict {
                    expected,
                    current: guard.revision,
                });
            }
        }
        let mut next = guard.clone();
        f(&mut next)?;
        self.persist(&next)?;
        *guard = next.clone();
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qareview::session::{CaptionPair, PieceVerdict};

    fn session(id: &str) -> ReviewSession {
        ReviewSession::new(
            id,
            &[CaptionPair {
                image: "a.png".into(),
                caption: "A road. Two houses.".into(),
            }],
        )
    }

    #[test]
    fn mutations_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        store.create(session("s1")).unwrap();
        let s = store.mutate("s1", Some(0), |s| s.record_verdict(0, 1, 0, PieceVerdict::Accurate)).unwrap();
        assert_eq!(s.revision, 1);
        let again = SessionStore::open(dir.path()).unwrap();
        assert_eq!(again.get("s1").unwrap(), s);
    }

    #[test]
    fn stale_revision_and_bad_index_change_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        store.create(session("s1")).unwrap();
        store.mutate("s1", None, |s| s.record_verdict(0, 0, 0, PieceVerdict::Accurate)).unwrap();
        let err = store.mutate("s1", Some(0), |s| s.record_verdict(0, 0, 0, PieceVerdict::Inaccurate)).unwrap_err();
        assert!(matches!(err, StoreError::Conflict { expected: 0, current: 1 }));
        let err = store.mutate("s1", Some(1), |s| s.record_verdict(0, 9, 0, PieceVerdict::Inaccurate)).unwrap_err();
        assert!(matches!(err, StoreError::Review(ReviewError::NoSentence(0, 9))));
        let s = SessionStore::open(dir.path()).unwrap().get("s1").unwrap();
        assert_eq!(s.revision, 1);
        assert_eq!(s.pairs[0].sentences[0].pieces[0].verdict, PieceVerdict::Accurate);
    }

    #[test]
    fn ids_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        assert!(matches!(store.create(session("../x")), Err(StoreError::BadId(_))));
        store.create(session("a")).unwrap();
        assert!(matches!(store.create(session("a")), Err(StoreError::Exists(_))));
        assert!(matches!(store.get("b"), Err(StoreError::NotFound(_))));
    }
}
