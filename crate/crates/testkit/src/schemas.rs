//! Random schemas that satisfy their own profile, for serialization and
//! export tests.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use draftmarks_core::controller::{
    intent_profile, Channel, DocumentBlock, DocumentNode, FeedbackEntry, FontClass, Granularity,
    IntentProfile, Intensity, Mark, MarkAnchor, MarkPayload, ProcessSchema, PromptDetail, Role,
    SchemaDocument, SegmentSpan, TemporalDepth, BLOCK_SEPARATOR,
};
use draftmarks_core::model::{BlockKind, NodeId};

const PIECES: &[&str] = &[
    "plain", "words", "<b>", "a & b", "\"quoted\"", "it's", "naïve", "日本語", "tab\there",
    "line\nbreak", "emoji 🎈", "x > y", "</span>", "",
];

fn text(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n)
        .map(|_| *PIECES.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn document(rng: &mut ChaCha8Rng) -> SchemaDocument {
    let mut doc = SchemaDocument::default();
    let mut next = 1u64;
    let mut cursor = 0;
    let mut emitted = false;
    for _ in 0..rng.gen_range(0..6) {
        let block = NodeId(next);
        next += 1;
        let contents: Vec<String> = (0..rng.gen_range(0..4)).map(|_| text(rng, 0, 6)).collect();
        let nonempty = contents.iter().any(|c| !c.is_empty());
        if nonempty && emitted {
            doc.text.push_str(BLOCK_SEPARATOR);
            cursor += BLOCK_SEPARATOR.chars().count();
        }
        let start = cursor;
        for c in contents {
            let len = c.chars().count();
            doc.text.push_str(&c);
            doc.nodes.push(DocumentNode {
                node: NodeId(next),
                block,
                start: cursor,
                end: cursor + len,
                font: if rng.gen_bool(0.5) { FontClass::Script } else { FontClass::Sans },
            });
            next += 1;
            cursor += len;
        }
        doc.blocks.push(DocumentBlock {
            node: block,
            kind: *[BlockKind::Paragraph, BlockKind::Heading, BlockKind::List]
                .choose(rng)
                .unwrap(),
            start,
            end: cursor,
        });
        emitted |= nonempty;
    }
    doc
}

fn profile(rng: &mut ChaCha8Rng, role: Role) -> IntentProfile {
    if rng.gen_bool(0.5) {
        return intent_profile(role);
    }
    let mut variants = BTreeMap::new();
    for c in Channel::ALL {
        let set: BTreeSet<_> = c.variants().iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        if !set.is_empty() || rng.gen_bool(0.2) {
            variants.insert(c, set);
        }
    }
    IntentProfile {
        role,
        variants,
        temporal_depth: if rng.gen_bool(0.3) {
            TemporalDepth::Unbounded
        } else {
            TemporalDepth::Versions(rng.gen_range(0..6))
        },
        granularity: *[Granularity::Phrase, Granularity::Node, Granularity::Paragraph]
            .choose(rng)
            .unwrap(),
        prompt_detail: if rng.gen_bool(0.5) {
            PromptDetail::FullPrompt
        } else {
            PromptDetail::InstructionOnly
        },
    }
}

fn anchor(rng: &mut ChaCha8Rng, doc: &SchemaDocument) -> MarkAnchor {
    let targets: Vec<(NodeId, usize, usize)> = doc
        .nodes
        .iter()
        .map(|n| (n.node, n.start, n.end))
        .chain(doc.blocks.iter().map(|b| (b.node, b.start, b.end)))
        .collect();
    match targets.choose(rng) {
        Some(&(node, s, e)) if rng.gen_bool(0.8) => {
            let a = rng.gen_range(s..=e);
            let b = rng.gen_range(a..=e);
            MarkAnchor::Span { node, start: a, end: b }
        }
        _ => MarkAnchor::Margin {
            offset: rng.gen_range(0..=doc.len()),
        },
    }
}

fn payload(rng: &mut ChaCha8Rng, anchor: &MarkAnchor, full: bool) -> MarkPayload {
    match rng.gen_range(0..5) {
        0 => MarkPayload::None,
        1 => {
            let (s, e) = (anchor.start(), anchor.end());
            let mut segments = Vec::new();
            let mut cursor = s;
            while cursor < e && rng.gen_bool(0.7) {
                let end = rng.gen_range(cursor + 1..=e);
                segments.push(SegmentSpan {
                    start: cursor,
                    end,
                    from_prompt: rng.gen_bool(0.5),
                });
                cursor = end;
            }
            MarkPayload::Generation {
                layers: rng.gen_range(1..4),
                stack: if full {
                    (0..rng.gen_range(0..3)).map(|_| text(rng, 1, 4)).collect()
                } else {
                    Vec::new()
                },
                original: rng.gen_bool(0.3).then(|| text(rng, 1, 5)),
                segments,
            }
        }
        2 => MarkPayload::Prompt {
            instruction: text(rng, 1, 5),
            context: (full && rng.gen_bool(0.6)).then(|| text(rng, 0, 6)),
        },
        3 => MarkPayload::Discards {
            texts: (0..rng.gen_range(1..4)).map(|_| text(rng, 1, 5)).collect(),
        },
        _ => MarkPayload::Feedback {
            entries: (0..rng.gen_range(1..4))
                .map(|k| FeedbackEntry {
                    text: text(rng, 1, 5),
                    layer: k + 1,
                    integrated: rng.gen_bool(0.5),
                })
                .collect(),
        },
    }
}

fn mark(
    rng: &mut ChaCha8Rng,
    doc: &SchemaDocument,
    p: &IntentProfile,
    channels: &[Channel],
    depth: usize,
) -> Option<Mark> {
    let usable: Vec<Channel> = channels.iter().copied().filter(|&c| p.allows_channel(c)).collect();
    let &channel = usable.choose(rng)?;
    let variants: Vec<_> = p.variants[&channel].iter().copied().collect();
    let &variant = variants.choose(rng)?;
    let anchor = anchor(rng, doc);
    let mut m = Mark::new(channel, variant, anchor);
    m.intensity = rng
        .gen_bool(0.4)
        .then(|| Intensity::from_ticks(rng.gen_range(0..=Intensity::SCALE)).unwrap());
    m.payload = payload(rng, &anchor, p.full_prompt());
    if depth < 3 {
        let inner: Vec<Channel> = Channel::ALL
            .into_iter()
            .filter(|&c| channel.may_contain(c))
            .collect();
        for _ in 0..rng.gen_range(0..3) {
            if let Some(c) = mark(rng, doc, p, &inner, depth + 1) {
                m.children.push(c);
            }
        }
    }
    Some(m)
}

/// A schema that passes its own validation.
pub fn random_schema(seed: u64) -> ProcessSchema {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let role = *Role::ALL.choose(&mut rng).unwrap();
    let document = document(&mut rng);
    let profile = profile(&mut rng, role);
    let marks = (0..rng.gen_range(0..12))
        .filter_map(|_| mark(&mut rng, &document, &profile, &Channel::ALL, 0))
        .collect();
    let hex = |rng: &mut ChaCha8Rng| -> String {
        (0..64).map(|_| format!("{:x}", rng.gen_range(0..16u8))).collect()
    };
    ProcessSchema {
        session: hex(&mut rng),
        role,
        config_fingerprint: hex(&mut rng),
        profile,
        document,
        marks,
    }
}
