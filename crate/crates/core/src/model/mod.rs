//! Version-controlled editor state with per-node provenance.
//!
//! A document is a tree of structural nodes (root, paragraphs, headings,
//! lists) holding text nodes. Node records are immutable: editing a node
//! allocates a new record in the same lineage. Versions are sealed only by
//! AI-related events (insertion, full removal, or enough deletion inside an
//! AI node); human edits between those events stay in the current version.

mod diff;
mod history;
mod node;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

pub use diff::{AddedNode, CharEdit, ContentChange, NodeChangeSet, StructureChange};
pub use history::{
    slice_chars, AiInsertion, AiRemoval, Authorship, ChildPos, DocumentHistory, Inserted,
    OrphanRecord, RemovalLevel, TextPos, Trigger, Version, DEFAULT_DELETION_THRESHOLD,
};
pub use node::{
    AiOrigin, AiSource, Author, BlockKind, GenerationId, Node, NodeId, PromptRecord, Provenance,
    StructuralNode, Style, TextNode, ROOT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not a text node")]
    NotText(NodeId),
    #[error("node {0} is not a structural node")]
    NotStructural(NodeId),
    #[error("offset {offset} out of range for node {node} of length {len}")]
    OffsetOutOfRange {
        node: NodeId,
        offset: usize,
        len: usize,
    },
    #[error("range {start}..{end} out of bounds for node {node} of length {len}")]
    RangeOutOfBounds {
        node: NodeId,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("child index {index} out of range for {parent} with {len} children")]
    ChildIndexOutOfRange {
        parent: NodeId,
        index: usize,
        len: usize,
    },
    #[error("the root node cannot be removed")]
    RemoveRoot,
    #[error("a root block cannot be nested")]
    NestedRoot,
    #[error("cannot split AI-authored node {0}")]
    SplitAiNode(NodeId),
    #[error("cannot create an empty node")]
    EmptyNode,
    #[error("prompt instruction is empty")]
    EmptyInstruction,
    #[error("version {index} out of range ({count} versions)")]
    VersionOutOfRange { index: usize, count: usize },
    #[error("invalid version pair {from}..{to}")]
    InvalidVersionPair { from: usize, to: usize },
}

/// A fully expanded tree with concrete contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditorState {
    pub root: MaterializedNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaterializedNode {
    Block {
        node: NodeId,
        record: NodeId,
        kind: BlockKind,
        children: Vec<MaterializedNode>,
    },
    Text {
        node: NodeId,
        record: NodeId,
        content: String,
        provenance: Provenance,
        style: BTreeSet<Style>,
    },
}

impl MaterializedNode {
    pub fn node(&self) -> NodeId {
        match self {
            MaterializedNode::Block { node, .. } | MaterializedNode::Text { node, .. } => *node,
        }
    }
}

impl EditorState {
    fn build(history: &DocumentHistory, version: &Version) -> Self {
        fn expand(h: &DocumentHistory, v: &Version, lineage: NodeId) -> MaterializedNode {
            match h.resolve_in(v, lineage).expect("tree references resolve") {
                Node::Text(t) => MaterializedNode::Text {
                    node: lineage,
                    record: t.id,
                    content: t.content.clone(),
                    provenance: t.provenance.clone(),
                    style: t.style.clone(),
                },
                Node::Structural(s) => MaterializedNode::Block {
                    node: lineage,
                    record: s.id,
                    kind: s.kind,
                    children: s.children.iter().map(|&c| expand(h, v, c)).collect(),
                },
            }
        }
        EditorState {
            root: expand(history, version, ROOT),
        }
    }

    /// Text nodes in document order.
    pub fn text_nodes(&self) -> Vec<&MaterializedNode> {
        fn walk<'a>(n: &'a MaterializedNode, out: &mut Vec<&'a MaterializedNode>) {
            match n {
                MaterializedNode::Text { .. } => out.push(n),
                MaterializedNode::Block { children, .. } => {
                    children.iter().for_each(|c| walk(c, out));
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Canonical indented dump: block kinds, authors and contents, one node
    /// per line. Two states with equal outlines have the same shape and text.
    pub fn outline(&self) -> String {
        fn walk(n: &MaterializedNode, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match n {
                MaterializedNode::Block { kind, children, .. } => {
                    let _ = writeln!(out, "{pad}{}", kind.name());
                    children.iter().for_each(|c| walk(c, depth + 1, out));
                }
                MaterializedNode::Text {
                    content,
                    provenance,
                    ..
                } => {
                    let who = match provenance.author() {
                        Author::Human => "human",
                        Author::Ai => "ai",
                    };
                    let _ = writeln!(out, "{pad}{who} {content:?}");
                }
            }
        }
        let mut out = String::new();
        walk(&self.root, 0, &mut out);
        out
    }
}
