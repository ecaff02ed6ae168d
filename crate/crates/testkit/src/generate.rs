//! Random but always-valid session logs. Validity is decided by the naive
//! replay, so the engine sees only logs the reference accepts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use draftmarks_core::ingest::{
    Anchor, CaptureSetup, EventKind, NewKeys, PasteSource, SessionEvent, SessionLog,
};
use draftmarks_core::model::PromptRecord;

use crate::naive::{Item, NaiveReplay};

const WORDS: &[&str] = &[
    "the", "river", "quiet", "morning", "I", "remember", "my", "sister", "laughing", "storm",
    "lantern", "café", "naïve", "school", "bridge", "every", "summer", "we", "walked", "home",
    "slowly", "because", "courage", "日本", "garden", "letter", "and", "forgot", "bright", "window",
];

#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_nodes: usize,
    pub max_events: usize,
    pub threshold: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits {
            max_nodes: 50,
            max_events: 200,
            threshold: 10,
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    model: NaiveReplay,
    log: SessionLog,
    next_key: usize,
    generated: Vec<String>,
    last_removed: Option<(usize, usize)>,
    limits: GenLimits,
}

impl Gen {
    fn words(&mut self, lo: usize, hi: usize) -> String {
        let n = self.rng.gen_range(lo..=hi);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(*WORDS.choose(&mut self.rng).unwrap());
        }
        out.join(" ")
    }

    fn sentence(&mut self) -> String {
        let mut s = self.words(2, 9);
        s.push(if self.rng.gen_bool(0.5) { '.' } else { ' ' });
        s
    }

    fn fresh_key(&mut self) -> String {
        self.next_key += 1;
        format!("n{}", self.next_key)
    }

    fn texts(&self) -> Vec<usize> {
        self.model.tree.texts()
    }

    fn key(&self, id: usize) -> String {
        self.model.key_of(id).expect("generated nodes are keyed").to_string()
    }

    fn push(&mut self, kind: EventKind) {
        let seq = self.log.events.len() as u64 + 1;
        let event = SessionEvent {
            seq,
            timestamp: 1_000 * seq,
            kind,
        };
        let applied = self
            .model
            .apply_bounded(&event, self.limits.max_nodes)
            .unwrap_or_else(|e| panic!("generator produced an invalid event {event:?}: {e}"));
        if applied {
            self.log.events.push(event);
        }
    }

    fn prompt(&mut self) -> PromptRecord {
        let instruction = self.words(1, 12);
        let context = match self.rng.gen_range(0..4) {
            0 => None,
            1 if !self.generated.is_empty() => self.generated.choose(&mut self.rng).cloned(),
            2 => {
                let texts = self.texts();
                texts
                    .choose(&mut self.rng)
                    .map(|&id| self.model.tree.text(id).1.to_string())
            }
            _ => Some(self.words(0, 15)),
        };
        PromptRecord::new(instruction, context).expect("instruction is never blank")
    }

    fn can_grow(&self) -> bool {
        self.model.node_count() < self.limits.max_nodes
    }

    /// A spot where AI text may land: never strictly inside an AI node.
    fn ai_anchor(&mut self) -> Option<Anchor> {
        let texts = self.texts();
        match self.rng.gen_range(0..5) {
            0 => None,
            1 => {
                let blocks = self.model.tree.blocks();
                let &b = blocks.choose(&mut self.rng)?;
                let key = self.model.key_of(b)?.to_string();
                Some(Anchor::child(key, None))
            }
            2 if self.last_removed.is_some() => {
                let (parent, idx) = self.last_removed.unwrap();
                let key = self.model.key_of(parent)?.to_string();
                if self.model.tree.parent_of(parent).is_none() && parent != 0 {
                    return None;
                }
                match &self.model.tree.items[parent] {
                    Item::Block { children, .. } if idx <= children.len() => {
                        Some(Anchor::child(key, Some(idx)))
                    }
                    _ => None,
                }
            }
            3 => {
                let &id = texts.choose(&mut self.rng)?;
                let (ai, content) = self.model.tree.text(id);
                let len = content.chars().count();
                let offset = if ai {
                    *[0, len].choose(&mut self.rng).unwrap()
                } else {
                    self.rng.gen_range(0..=len)
                };
                Some(Anchor::text(self.key(id), offset))
            }
            _ => Some(Anchor::child("root", None)),
        }
    }

    fn step(&mut self) {
        let texts = self.texts();
        let grow = self.can_grow();
        match self.rng.gen_range(0..100) {
            0..=14 if grow => {
                let text = self.sentence();
                let key = self.fresh_key();
                let block_kind = ["paragraph", "heading", "list"]
                    .choose(&mut self.rng)
                    .map(|s| s.to_string())
                    .filter(|_| self.rng.gen_bool(0.2));
                self.push(EventKind::KeyInsert {
                    at: Anchor::child("root", None),
                    text,
                    keys: NewKeys {
                        node: Some(key),
                        block_kind,
                        ..NewKeys::default()
                    },
                });
            }
            15..=21 if grow => {
                let blocks = self.model.tree.blocks();
                let Some(&b) = blocks.choose(&mut self.rng) else { return };
                let Some(bk) = self.model.key_of(b).map(str::to_string) else { return };
                let count = match &self.model.tree.items[b] {
                    Item::Block { children, .. } => children.len(),
                    _ => 0,
                };
                let index = self.rng.gen_range(0..=count);
                let text = self.sentence();
                let key = self.fresh_key();
                self.push(EventKind::KeyInsert {
                    at: Anchor::child(bk, Some(index)),
                    text,
                    keys: NewKeys {
                        node: Some(key),
                        ..NewKeys::default()
                    },
                });
            }
            22..=36 => {
                let Some(&id) = texts.choose(&mut self.rng) else { return };
                let len = self.model.tree.text(id).1.chars().count();
                let offset = self.rng.gen_range(0..=len);
                let text = format!(" {}", self.words(1, 3));
                self.push(EventKind::KeyInsert {
                    at: Anchor::text(self.key(id), offset),
                    text,
                    keys: NewKeys::default(),
                });
            }
            37..=54 => {
                let candidates: Vec<usize> = texts
                    .iter()
                    .copied()
                    .filter(|&id| !self.model.tree.text(id).1.is_empty())
                    .collect();
                let Some(&id) = candidates.choose(&mut self.rng) else { return };
                let len = self.model.tree.text(id).1.chars().count();
                let n = self.rng.gen_range(1..=len.min(12));
                let offset = self.rng.gen_range(0..=len - n);
                self.push(EventKind::KeyDelete {
                    node: self.key(id),
                    offset,
                    len: n,
                });
            }
            55..=61 => {
                let Some(&id) = texts.choose(&mut self.rng) else { return };
                let len = self.model.tree.text(id).1.chars().count();
                if len == 0 {
                    return;
                }
                self.last_removed = self.model.tree.parent_of(id);
                self.push(EventKind::KeyDelete {
                    node: self.key(id),
                    offset: 0,
                    len,
                });
            }
            62..=81 if grow => {
                let at = self.ai_anchor();
                let prompt = self.prompt();
                let mut text = self.sentence();
                if matches!(&at, None | Some(Anchor::Child { .. })) && self.rng.gen_bool(0.3) {
                    text = format!("{text}\n\n{}", self.sentence());
                }
                let inserted = if self.rng.gen_bool(0.05) {
                    String::new()
                } else {
                    text.clone()
                };
                let key = self.fresh_key();
                let tail = self.rng.gen_bool(0.5).then(|| format!("{key}t"));
                self.generated.push(text.clone());
                self.push(EventKind::AiGenerate {
                    at,
                    prompt,
                    generated: text,
                    inserted,
                    keys: NewKeys {
                        node: Some(key),
                        tail,
                        ..NewKeys::default()
                    },
                });
            }
            82..=89 if grow => {
                let source = if self.rng.gen_bool(0.5) {
                    PasteSource::External
                } else {
                    PasteSource::LocalApp
                };
                let at = match self.ai_anchor() {
                    Some(a) => a,
                    None => Anchor::child("root", None),
                };
                let text = self.sentence();
                let key = self.fresh_key();
                self.push(EventKind::Paste {
                    at,
                    text,
                    source,
                    keys: NewKeys {
                        node: Some(key),
                        ..NewKeys::default()
                    },
                });
            }
            90..=99 => {
                let blocks = self.model.tree.blocks();
                let target = match self.rng.gen_range(0..3) {
                    0 => None,
                    1 => Some("missing".to_string()),
                    _ => blocks
                        .choose(&mut self.rng)
                        .and_then(|&b| self.model.key_of(b).map(str::to_string)),
                };
                let prompt = self.prompt();
                let generated = self.sentence();
                self.push(EventKind::AiFeedback {
                    target,
                    prompt,
                    generated,
                });
            }
            _ => {}
        }
    }
}

/// A log of at most `limits.max_events` events that replays cleanly.
pub fn random_log(seed: u64, limits: GenLimits) -> SessionLog {
    let setup = [
        CaptureSetup::SplitContext,
        CaptureSetup::IntegratedTool,
        CaptureSetup::AmbientAssistant,
    ][(seed % 3) as usize];
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        model: NaiveReplay::new(limits.threshold),
        log: SessionLog::new(true, setup),
        next_key: 0,
        generated: Vec::new(),
        last_removed: None,
        limits,
    };
    let target = g.rng.gen_range(1..=limits.max_events);
    let mut attempts = 0;
    while g.log.events.len() < target && attempts < limits.max_events * 4 {
        g.step();
        attempts += 1;
    }
    g.log
}
