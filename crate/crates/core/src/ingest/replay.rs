use std::collections::HashMap;

use crate::model::{
    AiSource, Authorship, BlockKind, ChildPos, DocumentHistory, Inserted, NodeId, TextPos,
    DEFAULT_DELETION_THRESHOLD, ROOT,
};

use super::{
    external_paste_prompt, Anchor, EventKind, IngestError, NewKeys, ReplayError, SessionEvent,
    SessionLog,
};

/// Replay state: the history plus the mapping from log keys to lineages.
#[derive(Debug, Clone)]
pub struct Replay {
    pub history: DocumentHistory,
    keys: HashMap<String, NodeId>,
}

impl Replay {
    pub fn new(deletion_threshold: usize) -> Self {
        let mut keys = HashMap::new();
        keys.insert("root".to_string(), ROOT);
        Self {
            history: DocumentHistory::with_deletion_threshold(deletion_threshold),
            keys,
        }
    }

    /// Lineage registered under a log key.
    pub fn node(&self, key: &str) -> Option<NodeId> {
        self.keys.get(key).copied()
    }

    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), IngestError> {
        self.apply_kind(event)
            .map_err(|source| IngestError::Replay {
                seq: event.seq,
                source,
            })
    }

    fn apply_kind(&mut self, event: &SessionEvent) -> Result<(), ReplayError> {
        match &event.kind {
            EventKind::KeyInsert { at, text, keys } => {
                self.insert(event.seq, at, text, Authorship::Human, keys)
            }
            EventKind::Paste {
                at,
                text,
                source,
                keys,
            } => {
                let author = match source {
                    super::PasteSource::LocalApp => Authorship::Human,
                    super::PasteSource::External => Authorship::Ai {
                        source: AiSource::ExternalPaste,
                        prompt: external_paste_prompt(),
                        generated: text.clone(),
                    },
                };
                self.insert(event.seq, at, text, author, keys)
            }
            EventKind::AiGenerate {
                at,
                prompt,
                generated,
                inserted,
                keys,
            } => {
                if inserted.is_empty() {
                    return Ok(());
                }
                let at = at.clone().unwrap_or(Anchor::child("root", None));
                let author = Authorship::ai(prompt.clone(), generated.clone());
                self.insert(event.seq, &at, inserted, author, keys)
            }
            EventKind::KeyDelete { node, offset, len } => {
                let id = self.lookup(node)?;
                let t = self.history.text(id)?;
                let full = *offset == 0 && *len > 0 && *len == t.len();
                if full {
                    self.history.remove_node(id)?;
                } else {
                    self.history.delete_text(id, *offset..offset + len)?;
                }
                Ok(())
            }
            EventKind::AiFeedback {
                target,
                prompt,
                generated,
            } => {
                let target = target.as_deref().and_then(|k| self.keys.get(k).copied());
                self.history
                    .record_orphan(generated.clone(), prompt.clone(), target);
                Ok(())
            }
        }
    }

    fn insert(
        &mut self,
        seq: u64,
        at: &Anchor,
        text: &str,
        author: Authorship,
        keys: &NewKeys,
    ) -> Result<(), ReplayError> {
        for k in [&keys.node, &keys.block, &keys.tail].into_iter().flatten() {
            if self.keys.contains_key(k) {
                return Err(ReplayError::DuplicateKey(k.clone()));
            }
        }
        let created = match at {
            Anchor::Text { node, offset } => {
                let host = self.lookup(node)?;
                let created = self.history.insert_text(
                    TextPos {
                        node: host,
                        offset: *offset,
                    },
                    text,
                    author,
                )?;
                if let Some(tail) = created.split_tail {
                    let key = keys.tail.clone().unwrap_or_else(|| format!("{node}@{seq}"));
                    self.register(key, tail)?;
                }
                created
            }
            Anchor::Child { parent, index } => {
                let parent = self.lookup(parent)?;
                let kind = match keys.block_kind.as_deref() {
                    None | Some("paragraph") => BlockKind::Paragraph,
                    Some("heading") => BlockKind::Heading,
                    Some("list") => BlockKind::List,
                    Some(other) => return Err(ReplayError::UnknownBlockKind(other.to_string())),
                };
                self.history.insert_node(
                    ChildPos {
                        parent,
                        index: *index,
                    },
                    text,
                    author,
                    Some(kind),
                )?
            }
        };
        self.register_created(&created, keys)
    }

    fn register_created(&mut self, created: &Inserted, keys: &NewKeys) -> Result<(), ReplayError> {
        if let Some(base) = &keys.node {
            for (k, &id) in created.text_nodes.iter().enumerate() {
                let key = if k == 0 {
                    base.clone()
                } else {
                    format!("{base}.{k}")
                };
                self.register(key, id)?;
            }
        }
        for (k, &id) in created.blocks.iter().enumerate() {
            let key = match (&keys.block, &keys.node) {
                (Some(b), _) if k == 0 => b.clone(),
                (Some(b), _) => format!("{b}.{k}"),
                (None, Some(n)) if k == 0 => format!("{n}:p"),
                (None, Some(n)) => format!("{n}.{k}:p"),
                (None, None) => continue,
            };
            self.register(key, id)?;
        }
        Ok(())
    }

    fn register(&mut self, key: String, id: NodeId) -> Result<(), ReplayError> {
        if self.keys.contains_key(&key) {
            return Err(ReplayError::DuplicateKey(key));
        }
        self.keys.insert(key, id);
        Ok(())
    }

    fn lookup(&self, key: &str) -> Result<NodeId, ReplayError> {
        self.keys
            .get(key)
            .copied()
            .ok_or_else(|| ReplayError::UnknownKey(key.to_string()))
    }
}

/// Replay a consented log with the default deletion threshold.
pub fn replay_session(log: &SessionLog) -> Result<DocumentHistory, IngestError> {
    replay_session_with(log, DEFAULT_DELETION_THRESHOLD)
}

pub fn replay_session_with(
    log: &SessionLog,
    deletion_threshold: usize,
) -> Result<DocumentHistory, IngestError> {
    if !log.consent {
        return Err(IngestError::ConsentRequired);
    }
    let mut replay = Replay::new(deletion_threshold);
    for event in &log.events {
        replay.apply(event)?;
    }
    Ok(replay.history)
}
