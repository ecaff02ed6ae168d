//! Assertions shared by the integration tests and the acceptance run. Each
//! `check_*` panics with a description of the first violation.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use draftmarks_core::config::{EngineConfig, Thresholds};
use draftmarks_core::controller::{
    build_process_schema, sort_marks, Channel, Mark, MarkAnchor, MarkPayload, ProcessSchema, Role,
    Variant,
};
use draftmarks_core::fixtures;
use draftmarks_core::ingest::{replay_session, replay_session_with, EventKind, SessionLog};
use draftmarks_core::model::{AiSource, DocumentHistory, Node, NodeId, ROOT};
use draftmarks_core::schema_io::{canonical_json, parse_schema, serialize_schema, SchemaIoError};
use draftmarks_core::trace::{
    ai_nodes, analyze, DiscardAnchor, GenerationKind, SegmentOrigin, TraceSet,
};
use serde_json::Value;

use crate::naive::NaiveReplay;
use crate::oracles::{self, linkable_pairs};
use crate::script::{self, TriggerCase};

pub fn check_trigger_case(c: &TriggerCase) {
    let oracle = NaiveReplay::run(&c.log, 10).expect("oracle replays").version_count();
    assert_eq!(oracle, c.versions, "{}: oracle disagrees with the hand count", c.name);
    let h = replay_session(&c.log).unwrap_or_else(|e| panic!("{}: {e}", c.name));
    assert_eq!(h.version_count(), c.versions, "{}", c.name);
}

/// Every version of the engine's replay prints the same outline as the
/// full-copy replay.
pub fn check_replay(log: &SessionLog) {
    let h = replay_session_with(log, 10).expect("engine replays generated log");
    let oracle = NaiveReplay::run(log, 10).expect("oracle replays generated log");
    let expected = oracle.outlines();
    assert_eq!(h.version_count(), expected.len(), "version counts differ");
    for (i, want) in expected.iter().enumerate() {
        let got = h.materialize(i).unwrap().outline();
        assert_eq!(&got, want, "version {i} differs");
    }
}

pub struct Sharing {
    pub live_at_baseline: usize,
    pub pool_growth: usize,
    pub unique_records: usize,
}

/// Counts records referenced by the versions from the 100-node baseline on.
pub fn check_sharing() -> Sharing {
    let (before, after) = script::sharing_script();
    let b = replay_session(&before).unwrap();
    let baseline = b.current_index();
    let live_at_baseline = b.current().referenced().count();
    assert_eq!(live_at_baseline, 101);
    let h = replay_session(&after).unwrap();
    assert_eq!(h.version_count(), b.version_count() + 100);
    let pool_growth = h.pool_size() - b.pool_size();
    assert_eq!(pool_growth, 100);
    let unique_records = h.versions()[baseline..]
        .iter()
        .flat_map(|v| v.referenced().collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .len();
    assert!(unique_records <= 201, "{unique_records} unique records");
    check_replay(&after);
    Sharing {
        live_at_baseline,
        pool_growth,
        unique_records,
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    needle.is_empty() || haystack.windows(needle.len()).any(|w| w == needle)
}

fn slice(s: &str, a: usize, b: usize) -> String {
    s.chars().skip(a).take(b - a).collect()
}

pub fn check_segments(h: &DocumentHistory, t: &TraceSet, th: &Thresholds) {
    for (&lineage, segs) in &t.segments {
        let node = h.original(lineage).and_then(Node::as_text).unwrap();
        let origin = node.provenance.origin().unwrap();
        let len = origin.generated.chars().count();
        let mut cursor = 0;
        for s in segs {
            assert_eq!(s.start, cursor, "gap or overlap in {lineage}");
            assert!(s.end > s.start, "empty segment in {lineage}");
            cursor = s.end;
            if s.origin == SegmentOrigin::FromPrompt {
                assert_ne!(origin.source, AiSource::ExternalPaste);
                let run = oracles::words(&slice(&origin.generated, s.start, s.end));
                assert!(run.len() >= th.min_prompt_run);
                let instr = oracles::words(&origin.prompt.instruction);
                let ctx = oracles::words(origin.prompt.context.as_deref().unwrap_or(""));
                assert!(
                    contains_run(&instr, &run) || contains_run(&ctx, &run),
                    "{run:?} is not verbatim in the prompt"
                );
            }
        }
        assert_eq!(cursor, len, "segments of {lineage} do not cover the generation");
    }
}

pub fn check_chains(h: &DocumentHistory, t: &TraceSet, th: &Thresholds) {
    let gens = oracles::generations(h);
    let index: BTreeMap<NodeId, usize> = gens.iter().enumerate().map(|(i, g)| (g.node, i)).collect();
    let pairs: BTreeSet<(usize, usize)> = linkable_pairs(h, th.chain_overlap).into_iter().collect();
    let mut seen = BTreeSet::new();
    let mut prev = BTreeMap::new();
    let mut next = BTreeMap::new();
    for c in &t.chains {
        assert!(c.depth() >= 2);
        assert_eq!(c.links.len(), c.versions.len());
        for w in c.versions.windows(2) {
            assert!(w[0] < w[1], "chain versions not increasing: {:?}", c.versions);
        }
        for &l in &c.links {
            assert!(seen.insert(l), "node {l} in two chains");
        }
        for w in c.links.windows(2) {
            let (i, j) = (index[&w[0]], index[&w[1]]);
            assert!(pairs.contains(&(i, j)), "{} -> {} is not a valid link", w[0], w[1]);
            next.insert(i, j);
            prev.insert(j, i);
        }
        let head = index[&c.head()];
        assert_eq!((c.anchor.parent, c.anchor.after), (gens[head].parent, gens[head].after));
    }
    // Greedy maximality: a generation without a predecessor had no free
    // earlier generation it could have attached to.
    for j in 0..gens.len() {
        if prev.contains_key(&j) {
            continue;
        }
        for i in 0..j {
            if pairs.contains(&(i, j)) {
                assert!(
                    next.get(&i).is_some_and(|&k| k < j),
                    "generation {j} could have continued {i}"
                );
            }
        }
    }
}

fn superseded(t: &TraceSet, h: &DocumentHistory, node: NodeId) -> bool {
    t.chains
        .iter()
        .any(|c| c.links.contains(&node) && h.current().contains(c.head()))
}

pub fn check_discards(h: &DocumentHistory, t: &TraceSet) {
    let last = h.current();
    let mut seen = BTreeSet::new();
    for d in &t.discards {
        assert_eq!(d.discarded.len(), d.versions.len());
        match d.anchor {
            DiscardAnchor::After(n) => assert!(last.contains(n)),
            DiscardAnchor::Start(n) => assert!(n == ROOT || last.contains(n)),
        }
        for (&node, &version) in d.discarded.iter().zip(&d.versions) {
            assert!(!last.contains(node), "discarded {node} is still present");
            assert!(seen.insert(node), "{node} discarded twice");
            assert!(h
                .removals()
                .iter()
                .any(|r| r.node == node && r.version == version));
            let original = h.original(node).and_then(Node::as_text).unwrap();
            assert!(original.provenance.is_ai());
            assert!(!superseded(t, h, node), "{node} has a surviving successor");
        }
    }
    for r in h.removals() {
        if !last.contains(r.node) && !superseded(t, h, r.node) {
            assert!(seen.contains(&r.node), "removal of {} not reported", r.node);
        }
    }
}

pub fn check_edits(h: &DocumentHistory, t: &TraceSet) {
    let last = h.current();
    for (&lineage, e) in &t.edits {
        assert!(last.contains(lineage));
        let original = h.original(lineage).and_then(Node::as_text).unwrap();
        let now = h.text(lineage).unwrap();
        assert_eq!(e.apply(&original.content), now.content, "round trip of {lineage}");
        assert_eq!(e.is_empty(), original.content == now.content);
    }
    for lineage in ai_nodes(h) {
        if last.contains(lineage) {
            assert!(t.edits.contains_key(&lineage), "no edit trace for {lineage}");
        }
    }
}

pub fn check_kinds(h: &DocumentHistory, t: &TraceSet, th: &Thresholds) {
    let all: BTreeSet<NodeId> = ai_nodes(h).into_iter().collect();
    let keys: BTreeSet<NodeId> = t.kinds.keys().copied().collect();
    assert_eq!(all, keys);
    for (&lineage, &kind) in &t.kinds {
        let node = h.original(lineage).and_then(Node::as_text).unwrap();
        let origin = node.provenance.origin().unwrap();
        let expected = if node.orphan {
            GenerationKind::Feedback
        } else if origin.source == AiSource::ExternalPaste {
            GenerationKind::NewContent
        } else {
            match origin.prompt.context.as_deref().filter(|c| !c.trim().is_empty()) {
                Some(c) if oracles::containment(&origin.generated, c) >= th.tonal_overlap => {
                    GenerationKind::TonalShift
                }
                _ => GenerationKind::NewContent,
            }
        };
        assert_eq!(kind, expected, "{lineage}");
    }
}

pub fn check_feedback(h: &DocumentHistory, t: &TraceSet, th: &Thresholds) {
    assert_eq!(t.feedback.len(), h.orphans().len());
    for (f, o) in t.feedback.iter().zip(h.orphans()) {
        assert_eq!(f.orphan, o.node);
        if let (Some(target), Some(then)) = (f.target, &o.target_text) {
            let now = h.plain_text_in(h.current(), target).unwrap();
            let d = oracles::normalized_distance(then, &now);
            assert!((d - f.distance).abs() < 1e-9);
            assert_eq!(f.integrated, d >= th.feedback_integration);
        } else {
            assert!(!f.integrated);
        }
    }
}

fn schema(log: &SessionLog, role: Role, config: &EngineConfig) -> ProcessSchema {
    let h = replay_session(log).unwrap();
    let s = build_process_schema(&h, role, config).unwrap();
    s.validate().unwrap();
    s
}

pub fn marks_of(s: &ProcessSchema, channel: Channel) -> Vec<&Mark> {
    s.all_marks().into_iter().filter(|m| m.channel == channel).collect()
}

/// Prompt complexity computed from the raw instruction and context.
pub fn complexity(instruction: &str, context: Option<&str>) -> f64 {
    let words = oracles::words(instruction).len() as f64;
    let ctx = context.is_some_and(|c| !c.trim().is_empty());
    0.5 * (words / 50.0).min(1.0) + if ctx { 0.5 } else { 0.0 }
}

pub fn generation_prompts(log: &SessionLog) -> Vec<(String, Option<String>)> {
    log.events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::AiGenerate { prompt, .. } => {
                Some((prompt.instruction.clone(), prompt.context.clone()))
            }
            _ => None,
        })
        .collect()
}

pub fn check_matilda() {
    let log = fixtures::matilda();
    let s = schema(&log, Role::Teacher, &EngineConfig::default());
    let glue = marks_of(&s, Channel::ResidualGlue);
    assert!(!glue.is_empty(), "no glue");
    assert!(glue.iter().any(|m| m.variant == Variant::Sequenced));
    let tapes = marks_of(&s, Channel::MaskingTape);
    assert!(tapes.len() >= 2, "{} tapes", tapes.len());
    assert!(tapes.iter().any(|m| m.variant == Variant::Scrunched), "no scrunched tape");
    let h = replay_session(&log).unwrap();
    let t = analyze(&h, &EngineConfig::default().thresholds).unwrap();
    for m in &tapes {
        let MarkAnchor::Span { node, .. } = m.anchor else {
            panic!("tape in the margin")
        };
        assert_eq!(t.kinds[&node], GenerationKind::NewContent);
    }
    assert!(!marks_of(&s, Channel::Smudge).is_empty(), "no smudge");
}

pub fn check_lavender() {
    let log = fixtures::lavender();
    let h = replay_session(&log).unwrap();
    let t = analyze(&h, &EngineConfig::default().thresholds).unwrap();
    assert!(t.chains.iter().any(|c| c.depth() >= 2), "no chain of depth 2");
    let s = schema(&log, Role::Teacher, &EngineConfig::default());
    let stencils = marks_of(&s, Channel::Stencil);
    assert!(stencils.iter().any(|m| m.variant == Variant::Lined), "no integrated stencil");
    assert!(stencils.iter().any(|m| m.variant == Variant::Dotted), "no open stencil");
    let crumbs: BTreeSet<u16> = marks_of(&s, Channel::EraserCrumb)
        .iter()
        .map(|m| m.intensity.unwrap().ticks())
        .collect();
    assert!(crumbs.len() >= 2, "crumb intensities {crumbs:?}");
}

pub fn check_bruce() {
    let log = fixtures::bruce();
    let s = schema(&log, Role::Teacher, &EngineConfig::default());
    let crumbs = marks_of(&s, Channel::EraserCrumb);
    assert_eq!(crumbs.len(), 1, "crumbs");
    let (instruction, context) = &generation_prompts(&log)[0];
    let got = crumbs[0].intensity.unwrap().value();
    assert!(got < 0.3, "intensity {got}");
    assert!((got - complexity(instruction, context.as_deref())).abs() < 1e-4);
    let covered = taped_paragraphs(&s);
    assert!(covered >= 2, "{covered} fully taped paragraphs");
}

pub fn taped_paragraphs(s: &ProcessSchema) -> usize {
    let tapes = marks_of(s, Channel::MaskingTape);
    s.document
        .paragraphs()
        .into_iter()
        .filter(|b| b.end > b.start)
        .filter(|b| {
            (b.start..b.end).all(|i| tapes.iter().any(|m| m.anchor.start() <= i && i < m.anchor.end()))
        })
        .count()
}

fn places(s: &ProcessSchema) -> HashSet<(Channel, MarkAnchor)> {
    s.all_marks().iter().map(|m| (m.channel, m.anchor)).collect()
}

pub fn prompt_contexts(log: &SessionLog) -> Vec<String> {
    log.events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::AiGenerate { prompt, .. } | EventKind::AiFeedback { prompt, .. } => {
                prompt.context.clone()
            }
            _ => None,
        })
        .filter(|c| !c.trim().is_empty())
        .collect()
}

/// `s` as it appears inside a JSON string.
pub fn json_fragment(s: &str) -> String {
    let quoted = serde_json::to_string(s).unwrap();
    quoted[1..quoted.len() - 1].to_string()
}

/// Text a reviewer may legitimately see: the final document, instructions
/// and the generated text of AI nodes that survived.
pub fn visible_elsewhere(log: &SessionLog, document: &str, c: &str) -> bool {
    let h = replay_session(log).unwrap();
    let last = h.current();
    document.contains(c)
        || ai_nodes(&h).into_iter().filter(|&l| last.contains(l)).any(|l| {
            h.original(l)
                .and_then(|n| n.as_text())
                .and_then(|t| t.provenance.origin())
                .is_some_and(|o| o.generated.contains(c))
        })
        || log.events.iter().any(|e| match &e.kind {
            EventKind::AiGenerate { prompt, .. } | EventKind::AiFeedback { prompt, .. } => {
                prompt.instruction.contains(c)
            }
            _ => false,
        })
}

/// Contexts that exist only inside prompts. Returns how many were probed.
pub fn hidden_contexts(log: &SessionLog, document: &str, min_words: usize) -> Vec<String> {
    prompt_contexts(log)
        .into_iter()
        .filter(|c| c.split_whitespace().count() >= min_words)
        .filter(|c| !visible_elsewhere(log, document, c))
        .collect()
}

pub fn check_projection(log: &SessionLog) {
    let config = EngineConfig::default();
    let teacher = schema(log, Role::Teacher, &config);
    let reviewer = schema(log, Role::Reviewer, &config);
    let extra: Vec<_> = places(&reviewer).difference(&places(&teacher)).copied().collect();
    assert!(extra.is_empty(), "reviewer-only marks: {extra:?}");

    let raw = String::from_utf8(serialize_schema(&reviewer)).unwrap();
    for c in hidden_contexts(log, &teacher.document.text, 3) {
        assert!(!raw.contains(&json_fragment(&c)), "context leaked: {c:?}");
    }
    for m in reviewer.all_marks() {
        match &m.payload {
            MarkPayload::Prompt { context, .. } => assert!(context.is_none()),
            MarkPayload::Generation { stack, .. } => assert!(stack.is_empty()),
            _ => {}
        }
    }
    for role in Role::ALL {
        let s = schema(log, role, &config);
        for m in s.all_marks() {
            assert!(s.profile.allows(m.channel, m.variant), "{role}: {}", m.class_name());
        }
    }
}

/// Number of hidden contexts on the fixtures that reach the teacher
/// envelope but not the reviewer's.
pub fn check_hidden_contexts_on_fixtures() -> usize {
    let mut probes = 0;
    for (_, log) in fixtures::all() {
        let teacher = schema(&log, Role::Teacher, &EngineConfig::default());
        let reviewer = schema(&log, Role::Reviewer, &EngineConfig::default());
        let t = String::from_utf8(serialize_schema(&teacher)).unwrap();
        let r = String::from_utf8(serialize_schema(&reviewer)).unwrap();
        for c in hidden_contexts(&log, &teacher.document.text, 1) {
            probes += 1;
            assert!(t.contains(&json_fragment(&c)), "teacher lacks {c:?}");
            assert!(!r.contains(&json_fragment(&c)), "reviewer has {c:?}");
        }
    }
    assert!(probes >= 2, "{probes} probes");
    probes
}

pub fn fixture_schemas() -> Vec<(String, ProcessSchema)> {
    let mut out = Vec::new();
    for (name, log) in fixtures::all() {
        let h = replay_session(&log).unwrap();
        for role in Role::ALL {
            let s = build_process_schema(&h, role, &EngineConfig::default())
                .unwrap()
                .with_session("f".repeat(64));
            out.push((format!("{name}/{role}"), s));
        }
    }
    out
}

pub fn check_round_trip(name: &str, s: &ProcessSchema) {
    let bytes = serialize_schema(s);
    let back = parse_schema(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
    let mut sorted = s.clone();
    sort_marks(&mut sorted.marks);
    assert_eq!(back, sorted, "{name}: round trip changed the schema");
    assert_eq!(serialize_schema(&back), bytes, "{name}: bytes not stable");
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(canonical_json(&v).as_bytes(), &bytes[..], "{name}: not canonical");
}

fn reencode(v: &Value) -> Vec<u8> {
    canonical_json(v).into_bytes()
}

pub fn check_tamper_rejected(s: &ProcessSchema) {
    let bytes = serialize_schema(s);
    let good: Value = serde_json::from_slice(&bytes).unwrap();

    let mut v = good.clone();
    v["schema"]["document"]["text"] = Value::String("rewritten".into());
    assert!(matches!(parse_schema(&reencode(&v)), Err(SchemaIoError::BadChecksum)));

    let mut v = good.clone();
    v["checksum"] = Value::String("0".repeat(64));
    assert!(matches!(parse_schema(&reencode(&v)), Err(SchemaIoError::BadChecksum)));

    let mut v = good;
    v["format_version"] = Value::String("2".into());
    assert!(matches!(
        parse_schema(&reencode(&v)),
        Err(SchemaIoError::UnknownFormatVersion(_))
    ));

    let mut flipped = bytes.clone();
    let i = flipped.len() / 2;
    flipped[i] ^= 0x01;
    assert!(parse_schema(&flipped).is_err(), "flipped byte accepted");

    assert!(matches!(parse_schema(b"not json"), Err(SchemaIoError::Malformed(_))));
}
