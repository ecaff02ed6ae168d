//! Content-addressed session store on the local filesystem.
//!
//! ```text
//! <root>/sessions/<id>/log.jsonl
//! <root>/sessions/<id>/history-<fingerprint>.json
//! <root>/sessions/<id>/schema-<fingerprint>-<role>.json
//! ```
//!
//! `<id>` is the hex SHA-256 of the log bytes and `<fingerprint>` the first
//! 16 hex digits of the engine config fingerprint, so a config change makes
//! old caches invisible instead of stale.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::Mutex;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::controller::{build_process_schema, ControllerError, Role};
use crate::ingest::{parse_session_log, replay_session_with, IngestError};
use crate::model::DocumentHistory;
use crate::schema_io::{export_static_document, parse_schema, serialize_schema};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("session not found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl StoreError {
    /// True when the caller sent something unusable, as opposed to a
    /// failure on our side.
    pub fn is_client_error(&self) -> bool {
        matches!(self, StoreError::Ingest(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stored {
    /// False when the same log was already stored.
    pub created: bool,
}

pub fn session_id(log: &[u8]) -> String {
    hex::encode(Sha256::digest(log))
}

fn valid_id(id: &str) -> bool {
    id.len() == 64 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

pub struct SessionStore {
    root: PathBuf,
    config: EngineConfig,
    fingerprint: String,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>, config: EngineConfig) -> Result<Self, StoreError> {
        let root = root.into();
        let sessions = root.join("sessions");
        fs::create_dir_all(&sessions).map_err(|source| StoreError::Io {
            path: sessions,
            source,
        })?;
        let fingerprint = config.fingerprint();
        Ok(SessionStore {
            root,
            config,
            fingerprint,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(id)
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks
            .lock()
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(())))
            .clone()
    }

    fn short_fp(&self) -> &str {
        &self.fingerprint[..16]
    }

    pub fn exists(&self, id: &str) -> bool {
        valid_id(id) && self.dir(id).join("log.jsonl").is_file()
    }

    /// Validate, replay and persist a log. Nothing is written when the log
    /// does not parse, lacks consent or fails to replay.
    pub fn store_session(&self, log: &[u8]) -> Result<(String, Stored), StoreError> {
        let id = session_id(log);
        let parsed = parse_session_log(log)?;
        let history = replay_session_with(&parsed, self.config.thresholds.deletion)?;
        let lock = self.lock(&id);
        let _guard = lock.lock();
        if self.exists(&id) {
            return Ok((id, Stored { created: false }));
        }
        let dir = self.dir(&id);
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        self.write_history(&id, &history)?;
        write_atomic(&dir.join("log.jsonl"), log)?;
        Ok((id, Stored { created: true }))
    }

    pub fn raw_log(&self, id: &str) -> Result<Vec<u8>, StoreError> {
        if !self.exists(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let path = self.dir(id).join("log.jsonl");
        fs::read(&path).map_err(|source| StoreError::Io { path, source })
    }

    fn history_path(&self, id: &str) -> PathBuf {
        self.dir(id).join(format!("history-{}.json", self.short_fp()))
    }

    fn write_history(&self, id: &str, h: &DocumentHistory) -> Result<(), StoreError> {
        let bytes = serde_json::to_vec(h).expect("history serializes");
        write_atomic(&self.history_path(id), &bytes)
    }

    /// Replayed history, from cache when possible.
    pub fn history(&self, id: &str) -> Result<DocumentHistory, StoreError> {
        let lock = self.lock(id);
        let _guard = lock.lock();
        self.history_locked(id)
    }

    fn history_locked(&self, id: &str) -> Result<DocumentHistory, StoreError> {
        if !self.exists(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        if let Ok(bytes) = fs::read(self.history_path(id)) {
            if let Ok(h) = serde_json::from_slice(&bytes) {
                return Ok(h);
            }
        }
        let log = self.raw_log(id)?;
        let h = replay_session_with(&parse_session_log(&log)?, self.config.thresholds.deletion)?;
        self.write_history(id, &h)?;
        Ok(h)
    }

    /// Canonical envelope bytes for a role, built once per config.
    pub fn get_schema(&self, id: &str, role: Role) -> Result<Vec<u8>, StoreError> {
        let lock = self.lock(id);
        let _guard = lock.lock();
        if !self.exists(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let path = self
            .dir(id)
            .join(format!("schema-{}-{}.json", self.short_fp(), role.as_str()));
        if let Ok(bytes) = fs::read(&path) {
            if parse_schema(&bytes).is_ok() {
                return Ok(bytes);
            }
        }
        let h = self.history_locked(id)?;
        let schema = build_process_schema(&h, role, &self.config)?.with_session(id);
        let bytes = serialize_schema(&schema);
        write_atomic(&path, &bytes)?;
        Ok(bytes)
    }

    pub fn get_export(&self, id: &str, role: Role) -> Result<String, StoreError> {
        let bytes = self.get_schema(id, role)?;
        let schema = parse_schema(&bytes).expect("stored envelopes are valid");
        Ok(export_static_document(&schema))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}
