//! Hand-written session logs with hand-counted version totals.

use draftmarks_core::ingest::{
    Anchor, CaptureSetup, EventKind, NewKeys, PasteSource, SessionEvent, SessionLog,
};
use draftmarks_core::model::PromptRecord;

/// A 48-character generation.
pub const GEN: &str = "An assistant wrote this sentence of forty chars.";

pub struct Script(pub SessionLog);

impl Default for Script {
    fn default() -> Self {
        Script::new()
    }
}

impl Script {
    pub fn new() -> Self {
        Script(SessionLog::new(true, CaptureSetup::SplitContext))
    }

    pub fn push(&mut self, kind: EventKind) -> &mut Self {
        let seq = self.0.events.len() as u64 + 1;
        self.0.events.push(SessionEvent {
            seq,
            timestamp: seq,
            kind,
        });
        self
    }

    /// A human paragraph appended to the root.
    pub fn human(&mut self, key: &str, text: &str) -> &mut Self {
        self.push(EventKind::KeyInsert {
            at: Anchor::child("root", None),
            text: text.into(),
            keys: NewKeys {
                node: Some(key.into()),
                ..NewKeys::default()
            },
        })
    }

    pub fn type_at(&mut self, node: &str, offset: usize, text: &str) -> &mut Self {
        self.push(EventKind::KeyInsert {
            at: Anchor::text(node, offset),
            text: text.into(),
            keys: NewKeys::default(),
        })
    }

    pub fn ai(&mut self, key: &str, at: Anchor, text: &str) -> &mut Self {
        self.push(EventKind::AiGenerate {
            at: Some(at),
            prompt: PromptRecord::new("write something", None).unwrap(),
            generated: text.into(),
            inserted: text.into(),
            keys: NewKeys {
                node: Some(key.into()),
                ..NewKeys::default()
            },
        })
    }

    pub fn ai_at_end(&mut self, key: &str) -> &mut Self {
        self.ai(key, Anchor::child("root", None), GEN)
    }

    pub fn delete(&mut self, node: &str, offset: usize, len: usize) -> &mut Self {
        self.push(EventKind::KeyDelete {
            node: node.into(),
            offset,
            len,
        })
    }

    pub fn paste(&mut self, at: Anchor, text: &str, source: PasteSource) -> &mut Self {
        self.push(EventKind::Paste {
            at,
            text: text.into(),
            source,
            keys: NewKeys::default(),
        })
    }

    pub fn log(&self) -> SessionLog {
        self.0.clone()
    }
}

pub struct TriggerCase {
    pub name: &'static str,
    pub log: SessionLog,
    /// Versions including the initial one, counted by hand.
    pub versions: usize,
}

fn case(name: &'static str, versions: usize, build: impl FnOnce(&mut Script)) -> TriggerCase {
    let mut s = Script::new();
    build(&mut s);
    TriggerCase {
        name,
        log: s.0,
        versions,
    }
}

/// Scripted logs covering the three triggers and their boundaries, at the
/// default threshold of 10.
pub fn trigger_cases() -> Vec<TriggerCase> {
    vec![
        case("human typing only", 1, |s| {
            s.human("a", "hello").type_at("a", 5, " world").delete("a", 0, 3);
        }),
        case("ai insertion", 2, |s| {
            s.human("a", "hello").ai("g", Anchor::text("a", 5), GEN);
        }),
        case("ai removal", 3, |s| {
            s.ai_at_end("g").delete("g", 0, GEN.chars().count());
        }),
        case("nine deleted chars", 2, |s| {
            s.ai_at_end("g").delete("g", 0, 9);
        }),
        case("ten deleted chars", 3, |s| {
            s.ai_at_end("g").delete("g", 0, 10);
        }),
        case("nine single-char deletions", 2, |s| {
            s.ai_at_end("g");
            for _ in 0..9 {
                s.delete("g", 0, 1);
            }
        }),
        case("ten single-char deletions", 3, |s| {
            s.ai_at_end("g");
            for _ in 0..10 {
                s.delete("g", 0, 1);
            }
        }),
        case("counters are per node", 3, |s| {
            s.ai_at_end("g").ai_at_end("h").delete("g", 0, 5).delete("h", 0, 5);
        }),
        case("counter restarts after a version", 3, |s| {
            s.ai_at_end("g").delete("g", 0, 9).ai_at_end("h").delete("g", 0, 9);
        }),
        case("restarted counter reaches ten", 4, |s| {
            s.ai_at_end("g")
                .delete("g", 0, 9)
                .ai_at_end("h")
                .delete("g", 0, 9)
                .delete("g", 0, 1);
        }),
        case("human text is not counted", 2, |s| {
            s.human("a", "a human paragraph of text")
                .ai_at_end("g")
                .delete("a", 0, 15)
                .type_at("g", 3, "xyz");
        }),
        case("external paste", 2, |s| {
            s.human("a", "hello")
                .paste(Anchor::text("a", 5), " from elsewhere", PasteSource::External)
                .paste(Anchor::text("a", 0), "local ", PasteSource::LocalApp);
        }),
        case("feedback and rejected generations", 1, |s| {
            s.human("a", "hello");
            s.push(EventKind::AiFeedback {
                target: Some("a:p".into()),
                prompt: PromptRecord::new("thoughts?", None).unwrap(),
                generated: "Looks fine.".into(),
            });
            s.push(EventKind::AiGenerate {
                at: None,
                prompt: PromptRecord::new("write", None).unwrap(),
                generated: "Rejected before insertion.".into(),
                inserted: String::new(),
                keys: NewKeys::default(),
            });
        }),
    ]
}

/// One generation of 50 paragraphs (50 blocks and 50 text nodes under the
/// root), then 100 deletions of 10 characters, two per text node.
pub fn sharing_script() -> (SessionLog, SessionLog) {
    let body = vec![GEN; 50].join("\n\n");
    let mut s = Script::new();
    s.ai("g", Anchor::child("root", None), &body);
    let before = s.log();
    for e in 0..100 {
        let k = e % 50;
        let key = if k == 0 { "g".to_string() } else { format!("g.{k}") };
        s.delete(&key, 0, 10);
    }
    (before, s.0)
}
