//! Session logs: parsing, provenance attribution and replay into a
//! [`DocumentHistory`](crate::model::DocumentHistory).

mod log;
mod replay;

use std::fmt;

use thiserror::Error;

use crate::model::{Author, ModelError, PromptRecord};

pub use log::{
    parse_session_log, Anchor, CaptureSetup, EventKind, NewKeys, PasteSource, SessionEvent,
    SessionLog, LOG_FORMAT_VERSION,
};
pub use replay::{replay_session, replay_session_with, Replay};

/// Instruction recorded for content pasted from outside the writing app.
pub const EXTERNAL_PASTE_INSTRUCTION: &str = "unknown (external paste)";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("line {line}{}: {message}", field.as_deref().map(|f| format!(", field `{f}`")).unwrap_or_default())]
    Parse {
        line: usize,
        field: Option<String>,
        message: String,
    },
    #[error("consent required")]
    ConsentRequired,
    #[error("event {seq}: {source}")]
    Replay {
        seq: u64,
        #[source]
        source: ReplayError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown node key {0:?}")]
    UnknownKey(String),
    #[error("node key {0:?} is already in use")]
    DuplicateKey(String),
    #[error("unknown block kind {0:?}")]
    UnknownBlockKind(String),
}

/// An event with the author the composer heuristics assign to its content.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attributed<'a> {
    pub event: &'a SessionEvent,
    pub author: Author,
}

impl fmt::Display for Attributed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {} {:?}", self.event.seq, self.event.kind.name(), self.author)
    }
}

/// Typed content maps to keystrokes and is human; pastes from other apps
/// and logged model output are AI.
pub fn author_of(event: &SessionEvent) -> Author {
    match &event.kind {
        EventKind::KeyInsert { .. } | EventKind::KeyDelete { .. } => Author::Human,
        EventKind::Paste { source, .. } => match source {
            PasteSource::LocalApp => Author::Human,
            PasteSource::External => Author::Ai,
        },
        EventKind::AiGenerate { .. } | EventKind::AiFeedback { .. } => Author::Ai,
    }
}

pub fn attribute_provenance(events: &[SessionEvent]) -> Vec<Attributed<'_>> {
    events
        .iter()
        .map(|event| Attributed {
            event,
            author: author_of(event),
        })
        .collect()
}

/// Placeholder prompt for externally pasted content.
pub fn external_paste_prompt() -> PromptRecord {
    PromptRecord::new(EXTERNAL_PASTE_INSTRUCTION, None).expect("nonempty")
}
