//! Reference replay: a plain tree copied wholesale at every version
//! boundary. Shares no code with the engine's history.

use std::collections::HashMap;

use draftmarks_core::ingest::{Anchor, EventKind, PasteSource, SessionEvent, SessionLog};

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Block { kind: String, children: Vec<usize> },
    Text { ai: bool, content: String },
}

#[derive(Debug, Clone, Default)]
pub struct Tree {
    pub items: Vec<Item>,
}

impl Tree {
    pub fn parent_of(&self, id: usize) -> Option<(usize, usize)> {
        self.items.iter().enumerate().find_map(|(p, item)| match item {
            Item::Block { children, .. } => children.iter().position(|&c| c == id).map(|i| (p, i)),
            _ => None,
        })
    }

    fn children_mut(&mut self, id: usize) -> &mut Vec<usize> {
        match &mut self.items[id] {
            Item::Block { children, .. } => children,
            _ => panic!("not a block"),
        }
    }

    pub fn outline(&self) -> String {
        let mut out = String::new();
        self.walk(0, 0, &mut out);
        out
    }

    fn walk(&self, id: usize, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match &self.items[id] {
            Item::Block { kind, children } => {
                out.push_str(&format!("{pad}{kind}\n"));
                for &c in children {
                    self.walk(c, depth + 1, out);
                }
            }
            Item::Text { ai, content } => {
                let who = if *ai { "ai" } else { "human" };
                out.push_str(&format!("{pad}{who} {content:?}\n"));
            }
        }
    }

    /// Attached text items, in document order.
    pub fn texts(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            match &self.items[id] {
                Item::Block { children, .. } => stack.extend(children.iter().rev()),
                Item::Text { .. } => out.push(id),
            }
        }
        out
    }

    /// Attached blocks other than the root.
    pub fn blocks(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            if let Item::Block { children, .. } = &self.items[id] {
                if id != 0 {
                    out.push(id);
                }
                stack.extend(children.iter().rev());
            }
        }
        out
    }

    pub fn text(&self, id: usize) -> (bool, &str) {
        match &self.items[id] {
            Item::Text { ai, content } => (*ai, content),
            _ => panic!("not text"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NaiveReplay {
    pub threshold: usize,
    pub sealed: Vec<Tree>,
    pub tree: Tree,
    pub keys: HashMap<String, usize>,
    counters: HashMap<usize, usize>,
}

fn chars_of(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Blank-line paragraph split for AI text arriving at the top level.
fn paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split("\n\n") {
        let trimmed = piece.trim_start_matches('\n').trim_end_matches('\n');
        if trimmed.chars().any(|c| !c.is_whitespace()) {
            out.push(trimmed.to_string());
        }
    }
    if out.is_empty() {
        out.push(text.to_string());
    }
    out
}

impl NaiveReplay {
    pub fn new(threshold: usize) -> Self {
        let tree = Tree {
            items: vec![Item::Block {
                kind: "root".into(),
                children: Vec::new(),
            }],
        };
        let mut keys = HashMap::new();
        keys.insert("root".to_string(), 0);
        NaiveReplay {
            threshold,
            sealed: Vec::new(),
            tree,
            keys,
            counters: HashMap::new(),
        }
    }

    /// Every version's outline, the working one last.
    pub fn outlines(&self) -> Vec<String> {
        self.sealed
            .iter()
            .chain(std::iter::once(&self.tree))
            .map(Tree::outline)
            .collect()
    }

    pub fn version_count(&self) -> usize {
        self.sealed.len() + 1
    }

    /// Applies `event` only if the tree stays within `max_nodes` records.
    /// Returns whether it was applied.
    pub fn apply_bounded(&mut self, event: &SessionEvent, max_nodes: usize) -> Result<bool, String> {
        let saved = (self.tree.clone(), self.keys.clone(), self.counters.clone(), self.sealed.len());
        self.apply(event)?;
        if self.node_count() <= max_nodes {
            return Ok(true);
        }
        (self.tree, self.keys, self.counters) = (saved.0, saved.1, saved.2);
        self.sealed.truncate(saved.3);
        Ok(false)
    }

    pub fn node_count(&self) -> usize {
        self.tree.items.len()
    }

    fn seal(&mut self) {
        self.sealed.push(self.tree.clone());
        self.counters.clear();
    }

    fn add(&mut self, item: Item) -> usize {
        self.tree.items.push(item);
        self.tree.items.len() - 1
    }

    fn key(&mut self, key: String, id: usize) {
        assert!(self.keys.insert(key, id).is_none(), "duplicate key");
    }

    fn attached(&self, id: usize) -> bool {
        id == 0 || self.tree.parent_of(id).is_some()
    }

    fn lookup(&self, key: &str) -> Result<usize, String> {
        self.keys
            .get(key)
            .copied()
            .filter(|&id| self.attached(id))
            .ok_or_else(|| format!("unknown key {key}"))
    }

    pub fn run(log: &SessionLog, threshold: usize) -> Result<Self, String> {
        let mut r = NaiveReplay::new(threshold);
        for e in &log.events {
            r.apply(e)?;
        }
        Ok(r)
    }

    pub fn apply(&mut self, e: &SessionEvent) -> Result<(), String> {
        match &e.kind {
            EventKind::KeyInsert { at, text, keys } => {
                self.insert(e.seq, at, text, false, keys.node.as_deref(), keys.block.as_deref(), keys.tail.as_deref(), keys.block_kind.as_deref())
            }
            EventKind::Paste {
                at,
                text,
                source,
                keys,
            } => self.insert(
                e.seq,
                at,
                text,
                *source == PasteSource::External,
                keys.node.as_deref(),
                keys.block.as_deref(),
                keys.tail.as_deref(),
                keys.block_kind.as_deref(),
            ),
            EventKind::AiGenerate {
                at, inserted, keys, ..
            } => {
                if inserted.is_empty() {
                    return Ok(());
                }
                let at = at.clone().unwrap_or(Anchor::child("root", None));
                self.insert(e.seq, &at, inserted, true, keys.node.as_deref(), keys.block.as_deref(), keys.tail.as_deref(), keys.block_kind.as_deref())
            }
            EventKind::KeyDelete { node, offset, len } => self.delete(node, *offset, *len),
            EventKind::AiFeedback { .. } => Ok(()),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn insert(
        &mut self,
        seq: u64,
        at: &Anchor,
        text: &str,
        ai: bool,
        node_key: Option<&str>,
        block_key: Option<&str>,
        tail_key: Option<&str>,
        block_kind: Option<&str>,
    ) -> Result<(), String> {
        match at {
            Anchor::Text { node, offset } => {
                let host = self.lookup(node)?;
                let (host_ai, content) = match &self.tree.items[host] {
                    Item::Text { ai, content } => (*ai, content.clone()),
                    _ => return Err("not text".into()),
                };
                let cs = chars_of(&content);
                if *offset > cs.len() {
                    return Err("offset".into());
                }
                if text.is_empty() {
                    return Ok(());
                }
                let head: String = cs[..*offset].iter().collect();
                let rest: String = cs[*offset..].iter().collect();
                if !ai {
                    self.tree.items[host] = Item::Text {
                        ai: host_ai,
                        content: format!("{head}{text}{rest}"),
                    };
                    return Ok(());
                }
                let splits = *offset > 0 && *offset < cs.len();
                if splits && host_ai {
                    return Err("split ai".into());
                }
                self.seal();
                let (parent, idx) = self.tree.parent_of(host).ok_or("detached")?;
                let at_index = if *offset == 0 { idx } else { idx + 1 };
                let new = self.add(Item::Text {
                    ai: true,
                    content: text.to_string(),
                });
                self.tree.children_mut(parent).insert(at_index, new);
                if let Some(k) = node_key {
                    self.key(k.to_string(), new);
                }
                if splits {
                    let tail = self.add(Item::Text {
                        ai: host_ai,
                        content: rest,
                    });
                    self.tree.children_mut(parent).insert(at_index + 1, tail);
                    self.tree.items[host] = Item::Text {
                        ai: host_ai,
                        content: head,
                    };
                    let k = tail_key.map(str::to_string).unwrap_or_else(|| format!("{node}@{seq}"));
                    self.key(k, tail);
                }
                Ok(())
            }
            Anchor::Child { parent, index } => {
                let p = self.lookup(parent)?;
                let count = match &self.tree.items[p] {
                    Item::Block { children, .. } => children.len(),
                    _ => return Err("not a block".into()),
                };
                let index = index.unwrap_or(count);
                if index > count || text.is_empty() {
                    return Err("bad child insert".into());
                }
                let kind = block_kind.unwrap_or("paragraph").to_string();
                if ai {
                    self.seal();
                }
                let at_root = p == 0;
                let chunks = if ai && at_root {
                    paragraphs(text)
                } else {
                    vec![text.to_string()]
                };
                for (k, chunk) in chunks.into_iter().enumerate() {
                    let t = self.add(Item::Text { ai, content: chunk });
                    if let Some(base) = node_key {
                        let key = if k == 0 { base.to_string() } else { format!("{base}.{k}") };
                        self.key(key, t);
                    }
                    let child = if at_root {
                        let b = self.add(Item::Block {
                            kind: kind.clone(),
                            children: vec![t],
                        });
                        let bk = match (block_key, node_key) {
                            (Some(b), _) if k == 0 => Some(b.to_string()),
                            (Some(b), _) => Some(format!("{b}.{k}")),
                            (None, Some(n)) if k == 0 => Some(format!("{n}:p")),
                            (None, Some(n)) => Some(format!("{n}.{k}:p")),
                            (None, None) => None,
                        };
                        if let Some(bk) = bk {
                            self.key(bk, b);
                        }
                        b
                    } else {
                        t
                    };
                    self.tree.children_mut(p).insert(index + k, child);
                }
                Ok(())
            }
        }
    }

    fn delete(&mut self, key: &str, offset: usize, len: usize) -> Result<(), String> {
        let id = self.lookup(key)?;
        let (ai, content) = match &self.tree.items[id] {
            Item::Text { ai, content } => (*ai, content.clone()),
            _ => return Err("not text".into()),
        };
        let cs = chars_of(&content);
        if offset == 0 && len > 0 && len == cs.len() {
            if ai {
                self.seal();
            }
            let (parent, idx) = self.tree.parent_of(id).ok_or("detached")?;
            self.tree.children_mut(parent).remove(idx);
            self.counters.remove(&id);
            return Ok(());
        }
        if offset + len > cs.len() {
            return Err("range".into());
        }
        if len == 0 {
            return Ok(());
        }
        if ai {
            let total = self.counters.get(&id).copied().unwrap_or(0) + len;
            if total >= self.threshold {
                self.seal();
            } else {
                self.counters.insert(id, total);
            }
        }
        let kept: String = cs[..offset].iter().chain(&cs[offset + len..]).collect();
        self.tree.items[id] = Item::Text { ai, content: kept };
        Ok(())
    }

    /// Key of an attached item, if it has one.
    pub fn key_of(&self, id: usize) -> Option<&str> {
        self.keys
            .iter()
            .filter(|(_, &v)| v == id)
            .map(|(k, _)| k.as_str())
            .min()
    }
}
