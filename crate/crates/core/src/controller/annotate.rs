use crate::trace::{DiscardAnchor, GenerationKind};

use super::aggregate::{AggregatedTraceTree, CrumbSource, GenerationEntry, NodeSegment};
use super::document::FontClass;
use super::mark::{FeedbackEntry, Intensity, Mark, MarkAnchor, MarkPayload, SegmentSpan};
use super::{Channel, ControllerError, Granularity, IntentProfile, Variant};

/// First allowed variant among the applicable ones, else `single` if
/// allowed, else nothing.
fn pick(profile: &IntentProfile, channel: Channel, wanted: &[(bool, Variant)]) -> Option<Variant> {
    wanted
        .iter()
        .filter(|(applies, _)| *applies)
        .map(|&(_, v)| v)
        .chain(std::iter::once(Variant::Single))
        .find(|&v| profile.allows(channel, v))
}

fn crumb_mark(source: &CrumbSource, anchor: MarkAnchor, profile: &IntentProfile) -> Option<Mark> {
    let variant = pick(
        profile,
        Channel::EraserCrumb,
        &[(true, Variant::DensityVaried), (true, Variant::Solid)],
    )?;
    let full = profile.full_prompt();
    let prompt = |with_context: bool| MarkPayload::Prompt {
        instruction: source.prompt.instruction.clone(),
        context: source
            .prompt
            .context()
            .filter(|_| with_context)
            .map(str::to_string),
    };
    let mut mark = Mark::new(Channel::EraserCrumb, variant, anchor);
    if variant == Variant::DensityVaried {
        mark.intensity = Some(Intensity::from_score(source.complexity.score()));
    }
    mark.payload = prompt(full);
    let ghost = if full && profile.allows(Channel::GhostText, Variant::Full) {
        Some(Variant::Full)
    } else if profile.allows(Channel::GhostText, Variant::InstructionOnly) {
        Some(Variant::InstructionOnly)
    } else {
        None
    };
    if let Some(v) = ghost {
        let mut g = Mark::new(Channel::GhostText, v, anchor);
        g.payload = prompt(full && v == Variant::Full);
        mark.children.push(g);
    }
    Some(mark)
}

fn segment_spans(segments: &[NodeSegment], offset: usize) -> Vec<SegmentSpan> {
    segments
        .iter()
        .map(|s| SegmentSpan {
            start: offset + s.start,
            end: offset + s.end,
            from_prompt: s.from_prompt,
        })
        .collect()
}

fn generation_marks(
    tree: &AggregatedTraceTree,
    entry: &GenerationEntry,
    profile: &IntentProfile,
) -> Result<Vec<Mark>, ControllerError> {
    let dn = tree
        .document
        .node(entry.node)
        .ok_or(ControllerError::UnknownNode(entry.node))?;
    if dn.start == dn.end {
        return Ok(Vec::new());
    }
    let anchor = match tree.granularity {
        Granularity::Paragraph => {
            let b = tree
                .document
                .block(dn.block)
                .ok_or(ControllerError::UnknownNode(dn.block))?;
            MarkAnchor::Span {
                node: b.node,
                start: b.start,
                end: b.end,
            }
        }
        _ => MarkAnchor::Span {
            node: entry.node,
            start: dn.start,
            end: dn.end,
        },
    };
    let deletions = entry.edits.as_ref().is_some_and(|e| !e.deletions.is_empty());
    let insertions = entry.edits.as_ref().is_some_and(|e| !e.insertions.is_empty());
    let phrased = tree.granularity == Granularity::Phrase
        && entry.edits.is_none()
        && entry.segments.iter().any(|s| s.from_prompt);
    let chained = !entry.chain.is_empty();

    let payload = |variant: Variant| MarkPayload::Generation {
        layers: 1 + entry.chain.len(),
        stack: if profile.full_prompt() {
            entry.chain.iter().map(|m| m.generated.clone()).collect()
        } else {
            Vec::new()
        },
        original: matches!(variant, Variant::Scrunched | Variant::Torn).then(|| entry.original.clone()),
        segments: if variant == Variant::Segmented {
            segment_spans(&entry.segments, dn.start)
        } else {
            Vec::new()
        },
    };
    let smudge = |profile: &IntentProfile| {
        pick(profile, Channel::Smudge, &[(phrased, Variant::Segmented)]).map(|v| {
            let mut m = Mark::new(Channel::Smudge, v, anchor);
            m.payload = match payload(v) {
                MarkPayload::Generation { segments, .. } => MarkPayload::Generation {
                    layers: 1,
                    stack: Vec::new(),
                    original: None,
                    segments,
                },
                other => other,
            };
            m
        })
    };

    let mut main = if chained || entry.kind == GenerationKind::NewContent {
        pick(
            profile,
            Channel::MaskingTape,
            &[
                (deletions, Variant::Scrunched),
                (insertions, Variant::Torn),
                // A rewrite's prompt overlap is shown on its smudge instead.
                (phrased && entry.kind == GenerationKind::NewContent, Variant::Segmented),
                (chained, Variant::Stacked),
            ],
        )
        .map(|v| {
            let mut m = Mark::new(Channel::MaskingTape, v, anchor);
            m.payload = payload(v);
            if entry.kind == GenerationKind::TonalShift {
                m.children.extend(smudge(profile));
            }
            m
        })
    } else {
        smudge(profile)
    };

    let crumbs: Vec<Mark> = entry
        .crumbs
        .iter()
        .filter_map(|c| crumb_mark(c, anchor, profile))
        .collect();
    Ok(match main.as_mut() {
        Some(m) => {
            m.children.extend(crumbs);
            vec![main.unwrap()]
        }
        None => crumbs,
    })
}

/// Turn aggregated traces into marks the profile allows.
pub fn annotate_traces(
    tree: &AggregatedTraceTree,
    profile: &IntentProfile,
) -> Result<Vec<Mark>, ControllerError> {
    let doc = &tree.document;
    let mut marks = Vec::new();

    for n in doc.nodes.iter().filter(|n| n.end > n.start) {
        let v = match n.font {
            FontClass::Script => Variant::Script,
            FontClass::Sans => Variant::Sans,
        };
        if profile.allows(Channel::Font, v) {
            marks.push(Mark::new(
                Channel::Font,
                v,
                MarkAnchor::Span {
                    node: n.node,
                    start: n.start,
                    end: n.end,
                },
            ));
        }
    }

    let mut generation = Vec::new();
    for entry in &tree.generations {
        generation.extend(generation_marks(tree, entry, profile)?);
    }
    if tree.granularity == Granularity::Paragraph {
        generation = merge_same_place(generation);
    }
    marks.extend(generation);

    for d in &tree.discards {
        let offset = match d.anchor {
            DiscardAnchor::After(n) => doc.range(n).map(|r| r.1),
            DiscardAnchor::Start(n) => doc.range(n).map(|r| r.0),
        }
        .unwrap_or(0);
        let Some(v) = pick(profile, Channel::ResidualGlue, &[(d.texts.len() > 1, Variant::Sequenced)])
        else {
            continue;
        };
        let mut m = Mark::new(Channel::ResidualGlue, v, MarkAnchor::Margin { offset });
        m.payload = MarkPayload::Discards {
            texts: d.texts.clone(),
        };
        marks.push(m);
    }

    for f in &tree.feedback {
        let block = doc
            .range(f.target)
            .ok_or(ControllerError::UnknownNode(f.target))?;
        let Some(v) = pick(profile, Channel::Stencil, &[(f.rounds.len() > 1, Variant::Layered)]) else {
            continue;
        };
        let mut m = Mark::new(Channel::Stencil, v, MarkAnchor::Margin { offset: block.0 });
        m.payload = MarkPayload::Feedback {
            entries: f
                .rounds
                .iter()
                .map(|r| FeedbackEntry {
                    text: r.text.clone(),
                    layer: r.layer,
                    integrated: r.integrated,
                })
                .collect(),
        };
        let stroke = if f.rounds.iter().any(|r| r.integrated) {
            Variant::Lined
        } else {
            Variant::Dotted
        };
        if profile.allows(Channel::Stencil, stroke) {
            m.children.push(Mark::new(
                Channel::Stencil,
                stroke,
                MarkAnchor::Span {
                    node: f.target,
                    start: block.0,
                    end: block.1,
                },
            ));
        }
        marks.push(m);
    }

    super::mark::sort_marks(&mut marks);
    Ok(marks)
}

/// At paragraph granularity, marks of one channel over the same block
/// become one mark.
fn merge_same_place(marks: Vec<Mark>) -> Vec<Mark> {
    let mut out: Vec<Mark> = Vec::new();
    for m in marks {
        match out
            .iter_mut()
            .find(|o| o.channel == m.channel && o.anchor == m.anchor)
        {
            Some(o) => {
                if let (
                    MarkPayload::Generation { layers, stack, .. },
                    MarkPayload::Generation {
                        layers: l2,
                        stack: s2,
                        ..
                    },
                ) = (&mut o.payload, m.payload)
                {
                    *layers += l2;
                    stack.extend(s2);
                }
                o.children.extend(m.children);
            }
            None => out.push(m),
        }
    }
    out
}
