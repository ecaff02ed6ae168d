use serde_json::{json, Map, Value};

use crate::model::PromptRecord;

use super::IngestError;

pub const LOG_FORMAT_VERSION: &str = "1";

/// Capture setup the log was recorded in. Metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaptureSetup {
    SplitContext,
    IntegratedTool,
    AmbientAssistant,
}

impl CaptureSetup {
    pub fn as_str(self) -> &'static str {
        match self {
            CaptureSetup::SplitContext => "split_context",
            CaptureSetup::IntegratedTool => "integrated_tool",
            CaptureSetup::AmbientAssistant => "ambient_assistant",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "split_context" => CaptureSetup::SplitContext,
            "integrated_tool" => CaptureSetup::IntegratedTool,
            "ambient_assistant" => CaptureSetup::AmbientAssistant,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PasteSource {
    LocalApp,
    External,
}

/// Where an event applies. Node references are log-level keys; the replay
/// maps them to lineage ids as nodes get created.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Anchor {
    /// Inside the text node `node`, at a code-point offset.
    Text { node: String, offset: usize },
    /// A new child of the structural node `parent`; `None` appends.
    Child { parent: String, index: Option<usize> },
}

impl Anchor {
    pub fn text(node: impl Into<String>, offset: usize) -> Self {
        Anchor::Text {
            node: node.into(),
            offset,
        }
    }

    pub fn child(parent: impl Into<String>, index: Option<usize>) -> Self {
        Anchor::Child {
            parent: parent.into(),
            index,
        }
    }
}

/// Keys for nodes an event creates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct NewKeys {
    /// Key of the first created text node.
    pub node: Option<String>,
    /// Key of the first created block.
    pub block: Option<String>,
    /// Key of the tail produced when an AI insertion splits a text node.
    pub tail: Option<String>,
    /// Kind of blocks created at root level (`paragraph` when absent).
    pub block_kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventKind {
    KeyInsert {
        at: Anchor,
        text: String,
        keys: NewKeys,
    },
    KeyDelete {
        node: String,
        offset: usize,
        len: usize,
    },
    Paste {
        at: Anchor,
        text: String,
        source: PasteSource,
        keys: NewKeys,
    },
    AiGenerate {
        at: Option<Anchor>,
        prompt: PromptRecord,
        generated: String,
        inserted: String,
        keys: NewKeys,
    },
    AiFeedback {
        target: Option<String>,
        prompt: PromptRecord,
        generated: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::KeyInsert { .. } => "key_insert",
            EventKind::KeyDelete { .. } => "key_delete",
            EventKind::Paste { .. } => "paste",
            EventKind::AiGenerate { .. } => "ai_generate",
            EventKind::AiFeedback { .. } => "ai_feedback",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SessionEvent {
    pub seq: u64,
    /// Milliseconds.
    pub timestamp: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SessionLog {
    pub consent: bool,
    pub setup: CaptureSetup,
    pub events: Vec<SessionEvent>,
}

impl SessionLog {
    pub fn new(consent: bool, setup: CaptureSetup) -> Self {
        Self {
            consent,
            setup,
            events: Vec::new(),
        }
    }

    /// Serialize as line-delimited JSON: a header line, then one event per
    /// line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = json!({
            "version": LOG_FORMAT_VERSION,
            "consent": self.consent,
            "setup": self.setup.as_str(),
        });
        out.push_str(&header.to_string());
        out.push('\n');
        for e in &self.events {
            out.push_str(&event_to_json(e).to_string());
            out.push('\n');
        }
        out
    }
}

fn anchor_json(a: &Anchor) -> Value {
    match a {
        Anchor::Text { node, offset } => json!({ "node": node, "offset": offset }),
        Anchor::Child { parent, index } => {
            let mut m = Map::new();
            m.insert("parent".into(), json!(parent));
            if let Some(i) = index {
                m.insert("index".into(), json!(i));
            }
            Value::Object(m)
        }
    }
}

fn prompt_json(p: &PromptRecord) -> Value {
    let mut m = Map::new();
    m.insert("instruction".into(), json!(p.instruction));
    if let Some(c) = &p.context {
        m.insert("context".into(), json!(c));
    }
    Value::Object(m)
}

fn put_keys(m: &mut Map<String, Value>, keys: &NewKeys) {
    for (name, v) in [
        ("node", &keys.node),
        ("block", &keys.block),
        ("tail", &keys.tail),
        ("block_kind", &keys.block_kind),
    ] {
        if let Some(v) = v {
            m.insert(name.into(), json!(v));
        }
    }
}

fn event_to_json(e: &SessionEvent) -> Value {
    let mut m = Map::new();
    m.insert("seq".into(), json!(e.seq));
    m.insert("t".into(), json!(e.timestamp));
    m.insert("kind".into(), json!(e.kind.name()));
    match &e.kind {
        EventKind::KeyInsert { at, text, keys } => {
            m.insert("at".into(), anchor_json(at));
            m.insert("text".into(), json!(text));
            put_keys(&mut m, keys);
        }
        EventKind::KeyDelete { node, offset, len } => {
            m.insert("at".into(), json!({ "node": node, "offset": offset }));
            m.insert("len".into(), json!(len));
        }
        EventKind::Paste {
            at,
            text,
            source,
            keys,
        } => {
            m.insert("at".into(), anchor_json(at));
            m.insert("text".into(), json!(text));
            let source = match source {
                PasteSource::LocalApp => "local_app",
                PasteSource::External => "external",
            };
            m.insert("source".into(), json!(source));
            put_keys(&mut m, keys);
        }
        EventKind::AiGenerate {
            at,
            prompt,
            generated,
            inserted,
            keys,
        } => {
            m.insert("at".into(), at.as_ref().map_or(Value::Null, anchor_json));
            m.insert("prompt".into(), prompt_json(prompt));
            m.insert("generated".into(), json!(generated));
            m.insert("inserted".into(), json!(inserted));
            put_keys(&mut m, keys);
        }
        EventKind::AiFeedback {
            target,
            prompt,
            generated,
        } => {
            m.insert("target".into(), json!(target));
            m.insert("prompt".into(), prompt_json(prompt));
            m.insert("generated".into(), json!(generated));
        }
    }
    Value::Object(m)
}

// -------------------------------------------------------------------------
// Parsing
// -------------------------------------------------------------------------

struct Line<'a> {
    number: usize,
    obj: &'a Map<String, Value>,
}

impl<'a> Line<'a> {
    fn err(&self, field: &str, message: impl Into<String>) -> IngestError {
        IngestError::Parse {
            line: self.number,
            field: Some(field.to_string()),
            message: message.into(),
        }
    }

    fn get(&self, field: &str) -> Result<&'a Value, IngestError> {
        self.obj
            .get(field)
            .ok_or_else(|| self.err(field, "missing field"))
    }

    fn opt(&self, field: &str) -> Option<&'a Value> {
        self.obj.get(field).filter(|v| !v.is_null())
    }

    fn u64(&self, field: &str) -> Result<u64, IngestError> {
        self.get(field)?
            .as_u64()
            .ok_or_else(|| self.err(field, "expected a non-negative integer"))
    }

    fn str(&self, field: &str) -> Result<&'a str, IngestError> {
        self.get(field)?
            .as_str()
            .ok_or_else(|| self.err(field, "expected a string"))
    }

    fn opt_str(&self, field: &str) -> Result<Option<String>, IngestError> {
        match self.opt(field) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| self.err(field, "expected a string")),
        }
    }

    fn bool(&self, field: &str) -> Result<bool, IngestError> {
        self.get(field)?
            .as_bool()
            .ok_or_else(|| self.err(field, "expected a boolean"))
    }

    fn sub(&self, field: &str) -> Result<Line<'a>, IngestError> {
        let obj = self
            .get(field)?
            .as_object()
            .ok_or_else(|| self.err(field, "expected an object"))?;
        Ok(Line {
            number: self.number,
            obj,
        })
    }

    fn anchor(&self, field: &str) -> Result<Anchor, IngestError> {
        let a = self.sub(field)?;
        let scoped = |e: IngestError| match e {
            IngestError::Parse {
                line,
                field: Some(f),
                message,
            } => IngestError::Parse {
                line,
                field: Some(format!("{field}.{f}")),
                message,
            },
            other => other,
        };
        if a.obj.contains_key("node") {
            Ok(Anchor::Text {
                node: a.str("node").map_err(scoped)?.to_string(),
                offset: a.u64("offset").map_err(scoped)? as usize,
            })
        } else if a.obj.contains_key("parent") {
            let index = match a.opt("index") {
                None => None,
                Some(_) => Some(a.u64("index").map_err(scoped)? as usize),
            };
            Ok(Anchor::Child {
                parent: a.str("parent").map_err(scoped)?.to_string(),
                index,
            })
        } else {
            Err(self.err(field, "anchor needs `node` or `parent`"))
        }
    }

    fn prompt(&self) -> Result<PromptRecord, IngestError> {
        let p = self.sub("prompt")?;
        let instruction = p.str("instruction").map_err(|_| {
            self.err("prompt.instruction", "missing or non-string instruction")
        })?;
        let context = p
            .opt_str("context")
            .map_err(|_| self.err("prompt.context", "expected a string"))?;
        PromptRecord::new(instruction, context)
            .map_err(|_| self.err("prompt.instruction", "instruction is empty"))
    }

    fn keys(&self) -> Result<NewKeys, IngestError> {
        Ok(NewKeys {
            node: self.opt_str("node")?,
            block: self.opt_str("block")?,
            tail: self.opt_str("tail")?,
            block_kind: self.opt_str("block_kind")?,
        })
    }
}

/// Parse a session log. Errors name the 1-based line and the offending
/// field. Unknown extra fields are ignored.
pub fn parse_session_log(bytes: &[u8]) -> Result<SessionLog, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::Parse {
        line: line_of_byte(bytes, e.valid_up_to()),
        field: None,
        message: "invalid UTF-8".into(),
    })?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (hn, header) = lines.next().ok_or(IngestError::Parse {
        line: 1,
        field: None,
        message: "empty log: missing header line".into(),
    })?;
    let header_value = parse_object(hn, header)?;
    let h = Line {
        number: hn,
        obj: header_value.as_object().expect("checked"),
    };
    let version = h.str("version")?;
    if version != LOG_FORMAT_VERSION {
        return Err(h.err("version", format!("unsupported log version {version:?}")));
    }
    let consent = h.bool("consent")?;
    let setup_name = h.str("setup")?;
    let setup = CaptureSetup::parse(setup_name)
        .ok_or_else(|| h.err("setup", format!("unknown setup {setup_name:?}")))?;

    let mut events: Vec<SessionEvent> = Vec::new();
    for (n, raw) in lines {
        let value = parse_object(n, raw)?;
        let l = Line {
            number: n,
            obj: value.as_object().expect("checked"),
        };
        let seq = l.u64("seq")?;
        if let Some(prev) = events.last() {
            if seq <= prev.seq {
                return Err(IngestError::Parse {
                    line: n,
                    field: Some("seq".into()),
                    message: format!("non-monotonic seq at line {n} ({} after {})", seq, prev.seq),
                });
            }
        }
        let timestamp = l.u64("t")?;
        let kind = match l.str("kind")? {
            "key_insert" => EventKind::KeyInsert {
                at: l.anchor("at")?,
                text: l.str("text")?.to_string(),
                keys: l.keys()?,
            },
            "key_delete" => {
                let at = l.sub("at")?;
                EventKind::KeyDelete {
                    node: at
                        .str("node")
                        .map_err(|_| l.err("at.node", "missing or non-string node"))?
                        .to_string(),
                    offset: at
                        .u64("offset")
                        .map_err(|_| l.err("at.offset", "expected a non-negative integer"))?
                        as usize,
                    len: l.u64("len")? as usize,
                }
            }
            "paste" => EventKind::Paste {
                at: l.anchor("at")?,
                text: l.str("text")?.to_string(),
                source: match l.str("source")? {
                    "local_app" => PasteSource::LocalApp,
                    "external" => PasteSource::External,
                    other => return Err(l.err("source", format!("unknown paste source {other:?}"))),
                },
                keys: l.keys()?,
            },
            "ai_generate" => {
                let at = match l.opt("at") {
                    None => None,
                    Some(_) => Some(l.anchor("at")?),
                };
                let generated = l.str("generated")?.to_string();
                let inserted = l.str("inserted")?.to_string();
                if !generated.contains(inserted.as_str()) {
                    return Err(l.err("inserted", "inserted text is not part of the generation"));
                }
                EventKind::AiGenerate {
                    at,
                    prompt: l.prompt()?,
                    generated,
                    inserted,
                    keys: l.keys()?,
                }
            }
            "ai_feedback" => EventKind::AiFeedback {
                target: l.opt_str("target")?,
                prompt: l.prompt()?,
                generated: l.str("generated")?.to_string(),
            },
            other => return Err(l.err("kind", format!("unknown event kind {other:?}"))),
        };
        events.push(SessionEvent {
            seq,
            timestamp,
            kind,
        });
    }
    Ok(SessionLog {
        consent,
        setup,
        events,
    })
}

fn parse_object(line: usize, raw: &str) -> Result<Value, IngestError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| IngestError::Parse {
        line,
        field: None,
        message: format!("malformed record: {e}"),
    })?;
    if !value.is_object() {
        return Err(IngestError::Parse {
            line,
            field: None,
            message: "record is not an object".into(),
        });
    }
    Ok(value)
}

fn line_of_byte(bytes: &[u8], offset: usize) -> usize {
    bytes[..offset].iter().filter(|&&b| b == b'\n').count() + 1
}
