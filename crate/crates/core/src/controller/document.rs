use serde::{Deserialize, Serialize};

use crate::model::{BlockKind, DocumentHistory, Node, NodeId, Version};

/// Block separator in the shipped document text.
pub const BLOCK_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FontClass {
    /// Writer-authored text.
    Script,
    /// AI-authored text.
    Sans,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DocumentNode {
    pub node: NodeId,
    pub block: NodeId,
    pub start: usize,
    pub end: usize,
    pub font: FontClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DocumentBlock {
    pub node: NodeId,
    pub kind: BlockKind,
    pub start: usize,
    pub end: usize,
}

/// Final document text with node and block boundaries. Blocks are joined
/// with a blank line; empty blocks contribute nothing but keep a position.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemaDocument {
    pub text: String,
    pub nodes: Vec<DocumentNode>,
    pub blocks: Vec<DocumentBlock>,
}

impl SchemaDocument {
    pub fn len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&DocumentNode> {
        self.nodes.iter().find(|n| n.node == id)
    }

    pub fn block(&self, id: NodeId) -> Option<&DocumentBlock> {
        self.blocks.iter().find(|b| b.node == id)
    }

    /// Range of any node or block, by lineage.
    pub fn range(&self, id: NodeId) -> Option<(usize, usize)> {
        self.node(id)
            .map(|n| (n.start, n.end))
            .or_else(|| self.block(id).map(|b| (b.start, b.end)))
    }

    /// Non-empty blocks in order: the paragraphs a reader sees.
    pub fn paragraphs(&self) -> Vec<&DocumentBlock> {
        self.blocks.iter().filter(|b| b.end > b.start).collect()
    }
}

pub fn layout_document(h: &DocumentHistory, version: &Version) -> SchemaDocument {
    let mut doc = SchemaDocument::default();
    let Some(root) = h.resolve_in(version, crate::model::ROOT).and_then(Node::as_structural) else {
        return doc;
    };
    let mut cursor = 0;
    let mut emitted = false;
    for &block in &root.children {
        let mut leaves = Vec::new();
        collect_leaves(h, version, block, &mut leaves);
        let nonempty = leaves.iter().any(|(_, t, _)| !t.is_empty());
        if nonempty && emitted {
            doc.text.push_str(BLOCK_SEPARATOR);
            cursor += BLOCK_SEPARATOR.len();
        }
        let start = cursor;
        for (node, text, font) in leaves {
            let len = text.chars().count();
            doc.text.push_str(text);
            doc.nodes.push(DocumentNode {
                node,
                block,
                start: cursor,
                end: cursor + len,
                font,
            });
            cursor += len;
        }
        let kind = match h.resolve_in(version, block) {
            Some(Node::Structural(s)) => s.kind,
            _ => BlockKind::Paragraph,
        };
        doc.blocks.push(DocumentBlock {
            node: block,
            kind,
            start,
            end: cursor,
        });
        emitted |= nonempty;
    }
    doc
}

fn collect_leaves<'h>(
    h: &'h DocumentHistory,
    version: &Version,
    lineage: NodeId,
    out: &mut Vec<(NodeId, &'h str, FontClass)>,
) {
    match h.resolve_in(version, lineage) {
        Some(Node::Text(t)) => {
            let font = if t.provenance.is_ai() {
                FontClass::Sans
            } else {
                FontClass::Script
            };
            out.push((lineage, t.content.as_str(), font));
        }
        Some(Node::Structural(s)) => {
            for &c in &s.children {
                collect_leaves(h, version, c, out);
            }
        }
        None => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Authorship, ChildPos, PromptRecord, ROOT};

    #[test]
    fn blocks_are_joined_and_empty_blocks_skipped() {
        let mut h = DocumentHistory::new();
        let a = h
            .insert_node(ChildPos::append(ROOT), "First", Authorship::Human, None)
            .unwrap();
        let b = h
            .insert_node(
                ChildPos::append(ROOT),
                "Gone",
                Authorship::ai(PromptRecord::new("x", None).unwrap(), "Gone"),
                None,
            )
            .unwrap();
        h.remove_node(b.text_nodes[0]).unwrap();
        h.insert_node(ChildPos::append(ROOT), "Second", Authorship::Human, None)
            .unwrap();
        let doc = layout_document(&h, h.current());
        assert_eq!(doc.text, "First\n\nSecond");
        assert_eq!(doc.blocks.len(), 3);
        assert_eq!((doc.blocks[1].start, doc.blocks[1].end), (5, 5));
        assert_eq!(doc.paragraphs().len(), 2);
        assert_eq!(doc.range(a.text_nodes[0]), Some((0, 5)));
        assert_eq!(doc.nodes[1].font, FontClass::Script);
        assert_eq!((doc.nodes[1].start, doc.nodes[1].end), (7, 13));
    }
}
