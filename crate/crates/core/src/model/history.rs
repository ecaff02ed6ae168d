use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::node::{byte_offset, char_slice};
use super::{
    AiOrigin, AiSource, BlockKind, EditorState, GenerationId, ModelError, Node, NodeId,
    PromptRecord, Provenance, StructuralNode, TextNode, ROOT,
};

/// Characters deleted from one AI node, between snapshots, that seal a new
/// version.
pub const DEFAULT_DELETION_THRESHOLD: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Initial,
    AiInserted,
    AiRemoved,
    AiDeletionThreshold,
}

/// One entry of the version list.
///
/// `heads` maps every lineage reachable from the root to the record that
/// represents it in this version. Sealing a version clones the `Arc`, so
/// versions share both records and, until the next write, the table itself.
/// The last version is the working version: human edits land there until
/// the next trigger seals it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Version {
    pub index: usize,
    pub trigger: Trigger,
    heads: Arc<BTreeMap<NodeId, NodeId>>,
    deletion_counters: BTreeMap<NodeId, usize>,
}

impl Version {
    /// Record id of the root in this version.
    pub fn root(&self) -> NodeId {
        self.heads[&ROOT]
    }

    /// Record currently standing for `lineage`, if it is in this version's tree.
    pub fn resolve(&self, lineage: NodeId) -> Option<NodeId> {
        self.heads.get(&lineage).copied()
    }

    pub fn contains(&self, lineage: NodeId) -> bool {
        self.heads.contains_key(&lineage)
    }

    /// Record ids referenced by this version.
    pub fn referenced(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.heads.values().copied()
    }

    pub fn lineages(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.heads.keys().copied()
    }

    pub fn deletion_counter(&self, lineage: NodeId) -> usize {
        self.deletion_counters.get(&lineage).copied().unwrap_or(0)
    }

    pub(crate) fn shares_table_with(&self, other: &Version) -> bool {
        Arc::ptr_eq(&self.heads, &other.heads)
    }
}

/// Position inside a text node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextPos {
    pub node: NodeId,
    pub offset: usize,
}

/// Position among the children of a structural node; `None` appends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChildPos {
    pub parent: NodeId,
    pub index: Option<usize>,
}

impl ChildPos {
    pub fn append(parent: NodeId) -> Self {
        Self {
            parent,
            index: None,
        }
    }
}

/// Authorship of inserted text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Authorship {
    Human,
    Ai {
        source: AiSource,
        prompt: PromptRecord,
        generated: String,
    },
}

impl Authorship {
    pub fn ai(prompt: PromptRecord, generated: impl Into<String>) -> Self {
        Authorship::Ai {
            source: AiSource::Generation,
            prompt,
            generated: generated.into(),
        }
    }
}

/// Nodes created by one insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Inserted {
    /// New text-node lineages, in document order.
    pub text_nodes: Vec<NodeId>,
    /// Structural nodes created to hold them, parallel to `text_nodes` when
    /// the insertion happened at root level.
    pub blocks: Vec<NodeId>,
    /// Tail of a text node split by a mid-node AI insertion.
    pub split_tail: Option<NodeId>,
}

/// An AI insertion, recorded when it sealed its version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AiInsertion {
    pub version: usize,
    pub generation: GenerationId,
    pub nodes: Vec<NodeId>,
    pub parent: NodeId,
    /// Sibling immediately preceding the first inserted node.
    pub after: Option<NodeId>,
}

/// One level of a removed node's ancestry, captured just before removal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalLevel {
    pub parent: NodeId,
    /// Preceding siblings, nearest first.
    pub preceding: Vec<NodeId>,
}

/// Full removal of an AI-authored text node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AiRemoval {
    pub version: usize,
    pub node: NodeId,
    /// Last record of the node before it was detached.
    pub record: NodeId,
    /// Innermost level first.
    pub path: Vec<RemovalLevel>,
}

/// An AI generation that never entered the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrphanRecord {
    pub node: NodeId,
    /// Structural node the generation was about, if any.
    pub target: Option<NodeId>,
    /// Version that was current when the generation was requested.
    pub version: usize,
    /// Plain text of `target` at that moment; `None` when the target did not
    /// resolve.
    pub target_text: Option<String>,
}

/// Append-only, version-controlled editor state with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentHistory {
    pool: Vec<Node>,
    versions: Vec<Version>,
    orphans: Vec<OrphanRecord>,
    insertions: Vec<AiInsertion>,
    removals: Vec<AiRemoval>,
    next_generation: u32,
    deletion_threshold: usize,
}

impl Default for DocumentHistory {
    fn default() -> Self {
        Self::new()
    }
}

impl DocumentHistory {
    pub fn new() -> Self {
        Self::with_deletion_threshold(DEFAULT_DELETION_THRESHOLD)
    }

    pub fn with_deletion_threshold(threshold: usize) -> Self {
        let root = Node::Structural(StructuralNode {
            id: ROOT,
            lineage: ROOT,
            predecessor: None,
            kind: BlockKind::Root,
            children: Vec::new(),
        });
        let mut heads = BTreeMap::new();
        heads.insert(ROOT, ROOT);
        Self {
            pool: vec![root],
            versions: vec![Version {
                index: 0,
                trigger: Trigger::Initial,
                heads: Arc::new(heads),
                deletion_counters: BTreeMap::new(),
            }],
            orphans: Vec::new(),
            insertions: Vec::new(),
            removals: Vec::new(),
            next_generation: 0,
            deletion_threshold: threshold.max(1),
        }
    }

    pub fn deletion_threshold(&self) -> usize {
        self.deletion_threshold
    }

    pub fn versions(&self) -> &[Version] {
        &self.versions
    }

    pub fn version_count(&self) -> usize {
        self.versions.len()
    }

    pub fn current(&self) -> &Version {
        self.versions.last().expect("history always has a version")
    }

    pub fn current_index(&self) -> usize {
        self.versions.len() - 1
    }

    /// Number of node records ever allocated.
    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn record(&self, id: NodeId) -> Option<&Node> {
        self.pool.get(id.0 as usize)
    }

    pub fn records(&self) -> impl Iterator<Item = &Node> {
        self.pool.iter()
    }

    /// First record of a lineage; for AI nodes this holds the text as inserted.
    pub fn original(&self, lineage: NodeId) -> Option<&Node> {
        self.record(lineage).filter(|n| n.lineage() == lineage)
    }

    pub fn orphans(&self) -> &[OrphanRecord] {
        &self.orphans
    }

    pub fn insertions(&self) -> &[AiInsertion] {
        &self.insertions
    }

    pub fn removals(&self) -> &[AiRemoval] {
        &self.removals
    }

    pub fn version(&self, index: usize) -> Result<&Version, ModelError> {
        self.versions
            .get(index)
            .ok_or(ModelError::VersionOutOfRange {
                index,
                count: self.versions.len(),
            })
    }

    /// Record standing for `lineage` in version `version`.
    pub fn resolve_in(&self, version: &Version, lineage: NodeId) -> Option<&Node> {
        version.resolve(lineage).and_then(|id| self.record(id))
    }

    /// Text node for `lineage` in the working version.
    pub fn text(&self, lineage: NodeId) -> Result<&TextNode, ModelError> {
        self.resolve_in(self.current(), lineage)
            .ok_or(ModelError::UnknownNode(lineage))?
            .as_text()
            .ok_or(ModelError::NotText(lineage))
    }

    pub fn structural(&self, lineage: NodeId) -> Result<&StructuralNode, ModelError> {
        self.resolve_in(self.current(), lineage)
            .ok_or(ModelError::UnknownNode(lineage))?
            .as_structural()
            .ok_or(ModelError::NotStructural(lineage))
    }

    /// Parent lineage and child index of `lineage` in `version`.
    pub fn parent_in(&self, version: &Version, lineage: NodeId) -> Option<(NodeId, usize)> {
        version.heads.values().find_map(|&rec| {
            let s = self.record(rec)?.as_structural()?;
            let idx = s.children.iter().position(|&c| c == lineage)?;
            Some((s.lineage, idx))
        })
    }

    /// Plain text of a subtree in `version`: text nodes concatenated.
    pub fn plain_text_in(&self, version: &Version, lineage: NodeId) -> Option<String> {
        let mut out = String::new();
        self.collect_text(version, lineage, &mut out)?;
        Some(out)
    }

    fn collect_text(&self, version: &Version, lineage: NodeId, out: &mut String) -> Option<()> {
        match self.resolve_in(version, lineage)? {
            Node::Text(t) => out.push_str(&t.content),
            Node::Structural(s) => {
                for &c in &s.children {
                    self.collect_text(version, c, out)?;
                }
            }
        }
        Some(())
    }

    /// Lineages of the subtree rooted at `lineage` in `version`, pre-order.
    pub fn subtree_in(&self, version: &Version, lineage: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![lineage];
        while let Some(l) = stack.pop() {
            let Some(node) = self.resolve_in(version, l) else {
                continue;
            };
            out.push(l);
            if let Node::Structural(s) = node {
                stack.extend(s.children.iter().rev().copied());
            }
        }
        out
    }

    // ---------------------------------------------------------------------
    // Mutations. Each validates fully before touching state, so an error
    // leaves the history unchanged.
    // ---------------------------------------------------------------------

    /// Insert text at a position inside an existing text node.
    ///
    /// Human text is spliced into the node (a new record for the same
    /// lineage; the author is unchanged, even inside AI nodes). AI text
    /// becomes its own node, splitting a human host when the offset falls
    /// inside it, and seals a new version.
    pub fn insert_text(
        &mut self,
        at: TextPos,
        text: &str,
        author: Authorship,
    ) -> Result<Inserted, ModelError> {
        let host = self.text(at.node)?;
        let len = host.len();
        if at.offset > len {
            return Err(ModelError::OffsetOutOfRange {
                node: at.node,
                offset: at.offset,
                len,
            });
        }
        if text.is_empty() {
            return Ok(Inserted::default());
        }
        match author {
            Authorship::Human => {
                let b = byte_offset(&host.content, at.offset);
                let mut content = String::with_capacity(host.content.len() + text.len());
                content.push_str(&host.content[..b]);
                content.push_str(text);
                content.push_str(&host.content[b..]);
                self.rewrite_text(at.node, content);
                Ok(Inserted::default())
            }
            ai @ Authorship::Ai { .. } => {
                let splits = at.offset > 0 && at.offset < len;
                if splits && host.provenance.is_ai() {
                    return Err(ModelError::SplitAiNode(at.node));
                }
                let (parent, idx) = self
                    .parent_in(self.current(), at.node)
                    .ok_or(ModelError::UnknownNode(at.node))?;
                let host = host.clone();
                let origin = self.next_origin(ai);
                self.seal(Trigger::AiInserted);

                let mut inserted = Inserted::default();
                let mut children = self.structural(parent)?.children.clone();
                let insert_at = if at.offset == 0 { idx } else { idx + 1 };
                let ai_node = self.alloc_text(text.to_string(), Provenance::Ai(origin.clone()));
                children.insert(insert_at, ai_node);
                inserted.text_nodes.push(ai_node);
                if splits {
                    let b = byte_offset(&host.content, at.offset);
                    let tail = self.alloc(|id| {
                        Node::Text(TextNode {
                            id,
                            lineage: id,
                            predecessor: Some(host.id),
                            content: host.content[b..].to_string(),
                            provenance: host.provenance.clone(),
                            style: host.style.clone(),
                            orphan: false,
                        })
                    });
                    self.heads_mut().insert(tail, tail);
                    children.insert(insert_at + 1, tail);
                    self.rewrite_text(at.node, host.content[..b].to_string());
                    inserted.split_tail = Some(tail);
                }
                let after = insert_at.checked_sub(1).map(|i| children[i]);
                self.rewrite_children(parent, children);
                self.insertions.push(AiInsertion {
                    version: self.current_index(),
                    generation: origin.generation,
                    nodes: inserted.text_nodes.clone(),
                    parent,
                    after,
                });
                Ok(inserted)
            }
        }
    }

    /// Create a new text node among the children of a structural node.
    ///
    /// At root level the node is wrapped in a new block of `block` kind
    /// (paragraph by default); AI text containing blank lines becomes one
    /// block per paragraph. AI insertions seal a version.
    pub fn insert_node(
        &mut self,
        at: ChildPos,
        text: &str,
        author: Authorship,
        block: Option<BlockKind>,
    ) -> Result<Inserted, ModelError> {
        let parent = self.structural(at.parent)?;
        let count = parent.children.len();
        let index = at.index.unwrap_or(count);
        if index > count {
            return Err(ModelError::ChildIndexOutOfRange {
                parent: at.parent,
                index,
                len: count,
            });
        }
        if text.is_empty() {
            return Err(ModelError::EmptyNode);
        }
        let at_root = parent.kind == BlockKind::Root;
        let block_kind = block.unwrap_or(BlockKind::Paragraph);
        if block_kind == BlockKind::Root {
            return Err(ModelError::NestedRoot);
        }
        let mut children = parent.children.clone();

        let (provenance, chunks): (Provenance, Vec<&str>) = match author {
            Authorship::Human => (Provenance::Human, vec![text]),
            ai @ Authorship::Ai { .. } => {
                let origin = self.next_origin(ai);
                self.seal(Trigger::AiInserted);
                let chunks = if at_root {
                    split_paragraphs(text)
                } else {
                    vec![text]
                };
                (Provenance::Ai(origin), chunks)
            }
        };

        let mut inserted = Inserted::default();
        for (k, chunk) in chunks.into_iter().enumerate() {
            let t = self.alloc_text(chunk.to_string(), provenance.clone());
            inserted.text_nodes.push(t);
            let child = if at_root {
                let b = self.alloc(|id| {
                    Node::Structural(StructuralNode {
                        id,
                        lineage: id,
                        predecessor: None,
                        kind: block_kind,
                        children: vec![t],
                    })
                });
                self.heads_mut().insert(b, b);
                inserted.blocks.push(b);
                b
            } else {
                t
            };
            children.insert(index + k, child);
        }
        let after = index.checked_sub(1).map(|i| children[i]);
        self.rewrite_children(at.parent, children);
        if let Provenance::Ai(origin) = provenance {
            self.insertions.push(AiInsertion {
                version: self.current_index(),
                generation: origin.generation,
                nodes: inserted.text_nodes.clone(),
                parent: at.parent,
                after,
            });
        }
        Ok(inserted)
    }

    /// Delete a code-point range from a text node.
    ///
    /// Deletions inside AI nodes accumulate per node; reaching the deletion
    /// threshold seals a new version that contains the deletion, and the
    /// counters start over.
    pub fn delete_text(&mut self, node: NodeId, range: Range<usize>) -> Result<(), ModelError> {
        let t = self.text(node)?;
        let len = t.len();
        if range.start > range.end || range.end > len {
            return Err(ModelError::RangeOutOfBounds {
                node,
                start: range.start,
                end: range.end,
                len,
            });
        }
        if range.is_empty() {
            return Ok(());
        }
        let removed = range.end - range.start;
        let content = {
            let b0 = byte_offset(&t.content, range.start);
            let b1 = byte_offset(&t.content, range.end);
            let mut c = String::with_capacity(t.content.len() - (b1 - b0));
            c.push_str(&t.content[..b0]);
            c.push_str(&t.content[b1..]);
            c
        };
        if t.provenance.is_ai() {
            let total = self.current().deletion_counter(node) + removed;
            if total >= self.deletion_threshold {
                self.seal(Trigger::AiDeletionThreshold);
            } else {
                self.working_mut().deletion_counters.insert(node, total);
            }
        }
        self.rewrite_text(node, content);
        Ok(())
    }

    /// Detach a node (and its subtree) from the working tree. Records stay in
    /// the pool. Removing AI-authored content seals a new version.
    pub fn remove_node(&mut self, node: NodeId) -> Result<(), ModelError> {
        if node == ROOT {
            return Err(ModelError::RemoveRoot);
        }
        let current = self.current();
        let (parent, idx) = self
            .parent_in(current, node)
            .ok_or(ModelError::UnknownNode(node))?;
        let subtree = self.subtree_in(current, node);
        let ai_nodes: Vec<(NodeId, NodeId)> = subtree
            .iter()
            .filter_map(|&l| {
                let rec = self.resolve_in(current, l)?;
                rec.as_text()
                    .filter(|t| t.provenance.is_ai())
                    .map(|t| (l, t.id))
            })
            .collect();
        let paths: Vec<Vec<RemovalLevel>> = ai_nodes
            .iter()
            .map(|&(l, _)| self.removal_path(current, l))
            .collect();

        if !ai_nodes.is_empty() {
            self.seal(Trigger::AiRemoved);
        }
        let mut children = self.structural(parent)?.children.clone();
        children.remove(idx);
        self.rewrite_children(parent, children);
        let heads = self.heads_mut();
        for l in &subtree {
            heads.remove(l);
        }
        let working = self.working_mut();
        for l in &subtree {
            working.deletion_counters.remove(l);
        }
        let version = self.current_index();
        for ((node, record), path) in ai_nodes.into_iter().zip(paths) {
            self.removals.push(AiRemoval {
                version,
                node,
                record,
                path,
            });
        }
        Ok(())
    }

    /// Keep an AI generation that was not inserted (typically feedback).
    /// Does not seal a version.
    pub fn record_orphan(
        &mut self,
        content: impl Into<String>,
        prompt: PromptRecord,
        target: Option<NodeId>,
    ) -> NodeId {
        let content = content.into();
        let origin = self.next_origin(Authorship::ai(prompt, content.clone()));
        let id = self.alloc(|id| {
            Node::Text(TextNode {
                id,
                lineage: id,
                predecessor: None,
                content,
                provenance: Provenance::Ai(origin),
                style: BTreeSet::new(),
                orphan: true,
            })
        });
        let current = self.current();
        let target_text = target.and_then(|t| {
            self.resolve_in(current, t)?.as_structural()?;
            self.plain_text_in(current, t)
        });
        self.orphans.push(OrphanRecord {
            node: id,
            target,
            version: self.current_index(),
            target_text,
        });
        id
    }

    /// Expand a version into a concrete tree.
    pub fn materialize(&self, index: usize) -> Result<EditorState, ModelError> {
        let version = self.version(index)?;
        Ok(EditorState::build(self, version))
    }

    // ---------------------------------------------------------------------

    fn working_mut(&mut self) -> &mut Version {
        self.versions.last_mut().expect("history always has a version")
    }

    fn heads_mut(&mut self) -> &mut BTreeMap<NodeId, NodeId> {
        Arc::make_mut(&mut self.working_mut().heads)
    }

    fn seal(&mut self, trigger: Trigger) {
        let heads = Arc::clone(&self.current().heads);
        let index = self.versions.len();
        self.versions.push(Version {
            index,
            trigger,
            heads,
            deletion_counters: BTreeMap::new(),
        });
    }

    fn alloc(&mut self, make: impl FnOnce(NodeId) -> Node) -> NodeId {
        let id = NodeId(self.pool.len() as u64);
        self.pool.push(make(id));
        id
    }

    fn alloc_text(&mut self, content: String, provenance: Provenance) -> NodeId {
        let id = self.alloc(|id| {
            Node::Text(TextNode {
                id,
                lineage: id,
                predecessor: None,
                content,
                provenance,
                style: BTreeSet::new(),
                orphan: false,
            })
        });
        self.heads_mut().insert(id, id);
        id
    }

    fn next_origin(&mut self, author: Authorship) -> Arc<AiOrigin> {
        let Authorship::Ai {
            source,
            prompt,
            generated,
        } = author
        else {
            unreachable!("origin requested for human text")
        };
        let generation = GenerationId(self.next_generation);
        self.next_generation += 1;
        Arc::new(AiOrigin {
            generation,
            source,
            prompt,
            generated,
        })
    }

    fn rewrite_text(&mut self, lineage: NodeId, content: String) {
        let old = self.text(lineage).expect("validated").clone();
        let id = self.alloc(|id| {
            Node::Text(TextNode {
                id,
                lineage,
                predecessor: Some(old.id),
                content,
                provenance: old.provenance,
                style: old.style,
                orphan: false,
            })
        });
        self.heads_mut().insert(lineage, id);
    }

    fn rewrite_children(&mut self, lineage: NodeId, children: Vec<NodeId>) {
        let old = self.structural(lineage).expect("validated");
        let (old_id, kind) = (old.id, old.kind);
        let id = self.alloc(|id| {
            Node::Structural(StructuralNode {
                id,
                lineage,
                predecessor: Some(old_id),
                kind,
                children,
            })
        });
        self.heads_mut().insert(lineage, id);
    }

    fn removal_path(&self, version: &Version, lineage: NodeId) -> Vec<RemovalLevel> {
        let mut path = Vec::new();
        let mut cur = lineage;
        while let Some((parent, idx)) = self.parent_in(version, cur) {
            let siblings = &self
                .resolve_in(version, parent)
                .and_then(Node::as_structural)
                .expect("parent is structural")
                .children;
            path.push(RemovalLevel {
                parent,
                preceding: siblings[..idx].iter().rev().copied().collect(),
            });
            cur = parent;
        }
        path
    }
}

/// Split text on blank lines into paragraph chunks, dropping empty ones.
/// Falls back to the whole text when nothing nonblank remains.
fn split_paragraphs(text: &str) -> Vec<&str> {
    let chunks: Vec<&str> = text
        .split("\n\n")
        .map(|c| c.trim_matches('\n'))
        .filter(|c| !c.trim().is_empty())
        .collect();
    if chunks.is_empty() {
        vec![text]
    } else {
        chunks
    }
}

/// Text of a code-point range, for callers outside the model.
pub fn slice_chars(s: &str, range: Range<usize>) -> &str {
    char_slice(s, range.start, range.end)
}
