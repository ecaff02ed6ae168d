use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Identifier of an immutable node record.
///
/// Ids are allocated monotonically per document and never reused. The id of
/// the first record of a node doubles as the node's lineage id, which stays
/// stable while the node's content is rewritten into new records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Lineage id of the document root. Always the first record of a history.
pub const ROOT: NodeId = NodeId(0);

/// Groups the nodes produced by one AI call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenerationId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    Human,
    Ai,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptRecord {
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

impl PromptRecord {
    pub fn new(
        instruction: impl Into<String>,
        context: Option<String>,
    ) -> Result<Self, ModelError> {
        let instruction = instruction.into();
        if instruction.trim().is_empty() {
            return Err(ModelError::EmptyInstruction);
        }
        Ok(Self {
            instruction,
            context,
        })
    }

    /// Context, if present and not blank.
    pub fn context(&self) -> Option<&str> {
        self.context.as_deref().filter(|c| !c.trim().is_empty())
    }
}

/// Where AI-attributed content came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AiSource {
    /// A logged model call.
    Generation,
    /// Content pasted from outside the writing app; the prompt is unknown.
    ExternalPaste,
}

/// Provenance payload of AI-authored content.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AiOrigin {
    pub generation: GenerationId,
    pub source: AiSource,
    pub prompt: PromptRecord,
    /// The complete model output, even when only part of it was inserted.
    pub generated: String,
}

/// Who wrote a text node. The AI variant carries prompt and full generation,
/// so "prompt present iff AI" holds by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "author", rename_all = "snake_case")]
pub enum Provenance {
    Human,
    Ai(Arc<AiOrigin>),
}

impl Provenance {
    pub fn author(&self) -> Author {
        match self {
            Provenance::Human => Author::Human,
            Provenance::Ai(_) => Author::Ai,
        }
    }

    pub fn origin(&self) -> Option<&AiOrigin> {
        match self {
            Provenance::Human => None,
            Provenance::Ai(origin) => Some(origin),
        }
    }

    pub fn is_ai(&self) -> bool {
        matches!(self, Provenance::Ai(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Bold,
    Italic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextNode {
    pub id: NodeId,
    pub lineage: NodeId,
    pub predecessor: Option<NodeId>,
    pub content: String,
    pub provenance: Provenance,
    #[serde(default)]
    pub style: BTreeSet<Style>,
    #[serde(default)]
    pub orphan: bool,
}

impl TextNode {
    /// Length in code points.
    pub fn len(&self) -> usize {
        self.content.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.content.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Root,
    Paragraph,
    Heading,
    List,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Root => "root",
            BlockKind::Paragraph => "paragraph",
            BlockKind::Heading => "heading",
            BlockKind::List => "list",
        }
    }
}

/// A structural record. Children are lineage ids, resolved to concrete
/// records through a version's head table, so rewriting a child's content
/// does not copy its ancestors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralNode {
    pub id: NodeId,
    pub lineage: NodeId,
    pub predecessor: Option<NodeId>,
    pub kind: BlockKind,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Text(TextNode),
    Structural(StructuralNode),
}

impl Node {
    pub fn id(&self) -> NodeId {
        match self {
            Node::Text(t) => t.id,
            Node::Structural(s) => s.id,
        }
    }

    pub fn lineage(&self) -> NodeId {
        match self {
            Node::Text(t) => t.lineage,
            Node::Structural(s) => s.lineage,
        }
    }

    pub fn as_text(&self) -> Option<&TextNode> {
        match self {
            Node::Text(t) => Some(t),
            Node::Structural(_) => None,
        }
    }

    pub fn as_structural(&self) -> Option<&StructuralNode> {
        match self {
            Node::Text(_) => None,
            Node::Structural(s) => Some(s),
        }
    }
}

/// Code-point slicing helpers. Offsets everywhere in the model are counted in
/// `char`s, never bytes.
pub(crate) fn byte_offset(s: &str, chars: usize) -> usize {
    s.char_indices().nth(chars).map_or(s.len(), |(b, _)| b)
}

pub(crate) fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let b0 = byte_offset(s, start);
    let b1 = byte_offset(s, end);
    &s[b0..b1]
}
