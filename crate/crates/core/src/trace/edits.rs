use serde::{Deserialize, Serialize};
use similar::{capture_diff_slices, Algorithm, DiffOp};

use crate::model::{DocumentHistory, Node, NodeId};

use super::TraceError;

/// Human edits inside one AI node, in code points of the text as inserted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditTrace {
    pub node: NodeId,
    /// Text inserted before the original character at each offset.
    pub insertions: Vec<(usize, String)>,
    /// Deleted half-open ranges.
    pub deletions: Vec<(usize, usize)>,
}

impl EditTrace {
    pub fn is_empty(&self) -> bool {
        self.insertions.is_empty() && self.deletions.is_empty()
    }

    /// Rebuild the edited text from the original.
    pub fn apply(&self, original: &str) -> String {
        let mut out = String::with_capacity(original.len());
        let mut ins = self.insertions.iter().peekable();
        let mut del = self.deletions.iter().peekable();
        let chars: Vec<char> = original.chars().collect();
        for i in 0..=chars.len() {
            while let Some((_, text)) = ins.next_if(|(at, _)| *at == i) {
                out.push_str(text);
            }
            if i == chars.len() {
                break;
            }
            while del.next_if(|(_, end)| *end <= i).is_some() {}
            let deleted = del.peek().is_some_and(|(start, _)| *start <= i);
            if !deleted {
                out.push(chars[i]);
            }
        }
        out
    }
}

/// Split into alternating runs of whitespace and non-whitespace.
fn chunks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut prev: Option<bool> = None;
    for (b, c) in text.char_indices() {
        let ws = c.is_whitespace();
        if prev.is_some_and(|p| p != ws) {
            out.push(&text[start..b]);
            start = b;
        }
        prev = Some(ws);
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

/// Token diff between two texts, as an edit trace over `original`.
pub(crate) fn diff_texts(node: NodeId, original: &str, edited: &str) -> EditTrace {
    let old = chunks(original);
    let new = chunks(edited);
    let mut offsets = Vec::with_capacity(old.len() + 1);
    let mut acc = 0;
    for t in &old {
        offsets.push(acc);
        acc += t.chars().count();
    }
    offsets.push(acc);

    let mut trace = EditTrace {
        node,
        insertions: Vec::new(),
        deletions: Vec::new(),
    };
    let delete = |trace: &mut EditTrace, from: usize, len: usize| {
        let (s, e) = (offsets[from], offsets[from + len]);
        match trace.deletions.last_mut() {
            Some(last) if last.1 == s => last.1 = e,
            _ => trace.deletions.push((s, e)),
        }
    };
    // Positions come from our own cursor over the old side: the op's
    // `old_index` on inserts is not reliable after an equal run.
    let mut cursor = 0;
    for op in capture_diff_slices(Algorithm::Myers, &old, &new) {
        match op {
            DiffOp::Equal { len, .. } => cursor += len,
            DiffOp::Delete { old_len, .. } => {
                delete(&mut trace, cursor, old_len);
                cursor += old_len;
            }
            DiffOp::Insert {
                new_index, new_len, ..
            } => trace
                .insertions
                .push((offsets[cursor], new[new_index..new_index + new_len].concat())),
            DiffOp::Replace {
                old_len,
                new_index,
                new_len,
                ..
            } => {
                trace
                    .insertions
                    .push((offsets[cursor], new[new_index..new_index + new_len].concat()));
                delete(&mut trace, cursor, old_len);
                cursor += old_len;
            }
        }
    }
    trace
}

/// Compare an AI node as inserted with its text in the final version.
pub fn detect_intranode_edits(h: &DocumentHistory, lineage: NodeId) -> Result<EditTrace, TraceError> {
    let original = h
        .original(lineage)
        .and_then(Node::as_text)
        .ok_or(TraceError::UnknownNode(lineage))?;
    if !original.provenance.is_ai() {
        return Err(TraceError::NotAi(lineage));
    }
    let now = h
        .resolve_in(h.current(), lineage)
        .and_then(Node::as_text)
        .ok_or(TraceError::NotInFinal(lineage))?;
    Ok(diff_texts(lineage, &original.content, &now.content))
}
