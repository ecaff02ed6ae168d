use std::collections::{BTreeMap, BTreeSet};

use similar::{capture_diff_slices, Algorithm, DiffOp};

use super::{
    BlockKind, DocumentHistory, EditorState, MaterializedNode, ModelError, Node, NodeId,
    Provenance, Style, ROOT,
};

/// One step of a character-level edit script, in code points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CharEdit {
    Keep(usize),
    Delete(usize),
    Insert(String),
}

impl CharEdit {
    pub fn script(old: &str, new: &str) -> Vec<CharEdit> {
        let a: Vec<char> = old.chars().collect();
        let b: Vec<char> = new.chars().collect();
        let mut out: Vec<CharEdit> = Vec::new();
        for op in capture_diff_slices(Algorithm::Myers, &a, &b) {
            match op {
                DiffOp::Equal { len, .. } => out.push(CharEdit::Keep(len)),
                DiffOp::Delete { old_len, .. } => out.push(CharEdit::Delete(old_len)),
                DiffOp::Insert {
                    new_index, new_len, ..
                } => out.push(CharEdit::Insert(
                    b[new_index..new_index + new_len].iter().collect(),
                )),
                DiffOp::Replace {
                    old_len,
                    new_index,
                    new_len,
                    ..
                } => {
                    out.push(CharEdit::Delete(old_len));
                    out.push(CharEdit::Insert(
                        b[new_index..new_index + new_len].iter().collect(),
                    ));
                }
            }
        }
        out
    }

    /// Apply a script; `None` if it does not fit `old`.
    pub fn apply(script: &[CharEdit], old: &str) -> Option<String> {
        let mut chars = old.chars();
        let mut out = String::with_capacity(old.len());
        for edit in script {
            match edit {
                CharEdit::Keep(n) => {
                    for _ in 0..*n {
                        out.push(chars.next()?);
                    }
                }
                CharEdit::Delete(n) => {
                    for _ in 0..*n {
                        chars.next()?;
                    }
                }
                CharEdit::Insert(s) => out.push_str(s),
            }
        }
        chars.next().is_none().then_some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AddedNode {
    Text {
        node: NodeId,
        record: NodeId,
        content: String,
        provenance: Provenance,
        style: BTreeSet<Style>,
    },
    Block {
        node: NodeId,
        record: NodeId,
        kind: BlockKind,
    },
}

impl AddedNode {
    pub fn node(&self) -> NodeId {
        match self {
            AddedNode::Text { node, .. } | AddedNode::Block { node, .. } => *node,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentChange {
    pub node: NodeId,
    pub from: NodeId,
    pub to: NodeId,
    pub script: Vec<CharEdit>,
}

/// New child list of a structural node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureChange {
    pub node: NodeId,
    pub to: NodeId,
    pub children: Vec<NodeId>,
}

/// Differences between two versions, keyed by lineage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeChangeSet {
    pub added: Vec<AddedNode>,
    pub removed: Vec<NodeId>,
    pub changed: Vec<ContentChange>,
    pub restructured: Vec<StructureChange>,
}

impl NodeChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty()
            && self.removed.is_empty()
            && self.changed.is_empty()
            && self.restructured.is_empty()
    }

    /// Apply to the materialization of the older version. Yields the newer
    /// one, or `None` when the change set does not belong to `state`.
    pub fn apply(&self, state: &EditorState) -> Option<EditorState> {
        enum Flat {
            Text {
                record: NodeId,
                content: String,
                provenance: Provenance,
                style: BTreeSet<Style>,
            },
            Block {
                record: NodeId,
                kind: BlockKind,
                children: Vec<NodeId>,
            },
        }
        fn flatten(n: &MaterializedNode, out: &mut BTreeMap<NodeId, Flat>) {
            match n {
                MaterializedNode::Text {
                    node,
                    record,
                    content,
                    provenance,
                    style,
                } => {
                    out.insert(
                        *node,
                        Flat::Text {
                            record: *record,
                            content: content.clone(),
                            provenance: provenance.clone(),
                            style: style.clone(),
                        },
                    );
                }
                MaterializedNode::Block {
                    node,
                    record,
                    kind,
                    children,
                } => {
                    out.insert(
                        *node,
                        Flat::Block {
                            record: *record,
                            kind: *kind,
                            children: children.iter().map(MaterializedNode::node).collect(),
                        },
                    );
                    children.iter().for_each(|c| flatten(c, out));
                }
            }
        }
        fn build(flat: &BTreeMap<NodeId, Flat>, lineage: NodeId, depth: usize) -> Option<MaterializedNode> {
            if depth > flat.len() {
                return None;
            }
            Some(match flat.get(&lineage)? {
                Flat::Text {
                    record,
                    content,
                    provenance,
                    style,
                } => MaterializedNode::Text {
                    node: lineage,
                    record: *record,
                    content: content.clone(),
                    provenance: provenance.clone(),
                    style: style.clone(),
                },
                Flat::Block {
                    record,
                    kind,
                    children,
                } => MaterializedNode::Block {
                    node: lineage,
                    record: *record,
                    kind: *kind,
                    children: children
                        .iter()
                        .map(|&c| build(flat, c, depth + 1))
                        .collect::<Option<_>>()?,
                },
            })
        }

        let mut flat = BTreeMap::new();
        flatten(&state.root, &mut flat);
        for r in &self.removed {
            flat.remove(r)?;
        }
        for a in &self.added {
            let entry = match a {
                AddedNode::Text {
                    record,
                    content,
                    provenance,
                    style,
                    ..
                } => Flat::Text {
                    record: *record,
                    content: content.clone(),
                    provenance: provenance.clone(),
                    style: style.clone(),
                },
                AddedNode::Block { record, kind, .. } => Flat::Block {
                    record: *record,
                    kind: *kind,
                    children: Vec::new(),
                },
            };
            if flat.insert(a.node(), entry).is_some() {
                return None;
            }
        }
        for c in &self.changed {
            match flat.get_mut(&c.node)? {
                Flat::Text {
                    record, content, ..
                } if *record == c.from => {
                    *content = CharEdit::apply(&c.script, content)?;
                    *record = c.to;
                }
                _ => return None,
            }
        }
        for s in &self.restructured {
            match flat.get_mut(&s.node)? {
                Flat::Block {
                    record, children, ..
                } => {
                    *record = s.to;
                    *children = s.children.clone();
                }
                Flat::Text { .. } => return None,
            }
        }
        Some(EditorState {
            root: build(&flat, ROOT, 0)?,
        })
    }
}

impl DocumentHistory {
    /// Changes from version `from` to version `to` (`from <= to`).
    pub fn diff_versions(&self, from: usize, to: usize) -> Result<NodeChangeSet, ModelError> {
        if from > to {
            return Err(ModelError::InvalidVersionPair { from, to });
        }
        let a = self.version(from)?;
        let b = self.version(to)?;
        let mut set = NodeChangeSet::default();
        if a.shares_table_with(b) {
            return Ok(set);
        }
        for lineage in a.lineages() {
            if !b.contains(lineage) {
                set.removed.push(lineage);
            }
        }
        for lineage in b.lineages() {
            let new_rec = b.resolve(lineage).expect("listed");
            let node = self.record(new_rec).expect("pool holds every record");
            match a.resolve(lineage) {
                None => {
                    set.added.push(match node {
                        Node::Text(t) => AddedNode::Text {
                            node: lineage,
                            record: t.id,
                            content: t.content.clone(),
                            provenance: t.provenance.clone(),
                            style: t.style.clone(),
                        },
                        Node::Structural(s) => AddedNode::Block {
                            node: lineage,
                            record: s.id,
                            kind: s.kind,
                        },
                    });
                    if let Node::Structural(s) = node {
                        set.restructured.push(StructureChange {
                            node: lineage,
                            to: s.id,
                            children: s.children.clone(),
                        });
                    }
                }
                Some(old_rec) if old_rec != new_rec => {
                    let old = self.record(old_rec).expect("pool holds every record");
                    match (old, node) {
                        (Node::Text(o), Node::Text(n)) => set.changed.push(ContentChange {
                            node: lineage,
                            from: o.id,
                            to: n.id,
                            script: CharEdit::script(&o.content, &n.content),
                        }),
                        (_, Node::Structural(s)) => set.restructured.push(StructureChange {
                            node: lineage,
                            to: s.id,
                            children: s.children.clone(),
                        }),
                        _ => unreachable!("a lineage keeps its node type"),
                    }
                }
                Some(_) => {}
            }
        }
        Ok(set)
    }
}
