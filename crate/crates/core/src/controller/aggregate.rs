use serde::{Deserialize, Serialize};

use crate::model::{AiSource, DocumentHistory, Node, NodeId, PromptRecord};
use crate::trace::{
    score_prompt_complexity, DiscardAnchor, EditTrace, GenerationKind, PromptComplexity,
    SegmentOrigin, TraceSet,
};

use super::document::{layout_document, FontClass, SchemaDocument};
use super::{ControllerError, Granularity, IntentProfile};

/// A prompt to show as an eraser crumb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrumbSource {
    pub node: NodeId,
    pub prompt: PromptRecord,
    pub complexity: PromptComplexity,
}

/// An earlier iteration folded under its chain head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMember {
    pub node: NodeId,
    pub version: usize,
    pub generated: String,
}

/// Stretch of a node's original text, in code points of that text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSegment {
    pub start: usize,
    pub end: usize,
    pub from_prompt: bool,
}

/// One AI node of the final document with the traces that survive the
/// profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationEntry {
    pub node: NodeId,
    pub kind: GenerationKind,
    /// Text as inserted.
    pub original: String,
    /// Writer edits since insertion, when recent enough and not empty.
    pub edits: Option<EditTrace>,
    /// Only at phrase granularity.
    pub segments: Vec<NodeSegment>,
    /// Earlier iterations, oldest first; empty unless this node heads a chain.
    pub chain: Vec<ChainMember>,
    pub crumbs: Vec<CrumbSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardGroup {
    pub anchor: DiscardAnchor,
    /// Discarded text, oldest first.
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRound {
    pub text: String,
    pub layer: usize,
    pub integrated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackGroup {
    pub target: NodeId,
    pub rounds: Vec<FeedbackRound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedTraceTree {
    pub document: SchemaDocument,
    pub granularity: Granularity,
    /// In document order.
    pub generations: Vec<GenerationEntry>,
    pub discards: Vec<DiscardGroup>,
    pub feedback: Vec<FeedbackGroup>,
}

fn crumb(h: &DocumentHistory, node: NodeId) -> Option<CrumbSource> {
    let origin = h.original(node)?.as_text()?.provenance.origin()?;
    (origin.source == AiSource::Generation).then(|| CrumbSource {
        node,
        prompt: origin.prompt.clone(),
        complexity: score_prompt_complexity(&origin.prompt),
    })
}

/// Version in which the current record of `lineage` was first visible.
fn settled_in(h: &DocumentHistory, lineage: NodeId) -> usize {
    let last = h.current();
    let Some(rec) = last.resolve(lineage) else {
        return h.current_index();
    };
    h.versions()
        .iter()
        .position(|v| v.resolve(lineage) == Some(rec))
        .unwrap_or(h.current_index())
}

/// Map generation segments onto a node's original text.
fn node_segments(generated: &str, original: &str, segments: &[crate::trace::Segment]) -> Vec<NodeSegment> {
    let Some(byte) = generated.find(original) else {
        return Vec::new();
    };
    let k = generated[..byte].chars().count();
    let len = original.chars().count();
    segments
        .iter()
        .filter_map(|s| {
            let start = s.start.max(k);
            let end = s.end.min(k + len);
            (start < end).then(|| NodeSegment {
                start: start - k,
                end: end - k,
                from_prompt: s.origin == SegmentOrigin::FromPrompt,
            })
        })
        .collect()
}

pub fn aggregate_traces(
    h: &DocumentHistory,
    traces: &TraceSet,
    profile: &IntentProfile,
) -> Result<AggregatedTraceTree, ControllerError> {
    let last_index = h.current_index();
    let depth = profile.temporal_depth;
    let document = layout_document(h, h.current());

    let chains: Vec<_> = traces
        .chains
        .iter()
        .filter(|c| depth.keeps(*c.versions.last().expect("nonempty chain"), last_index))
        .collect();

    // The crumb of a generation sits with its last node still in the
    // document.
    let mut crumb_holder = std::collections::BTreeMap::new();
    for dn in document.nodes.iter().filter(|n| n.font == FontClass::Sans) {
        if let Some(o) = h.original(dn.node).and_then(Node::as_text).and_then(|t| t.provenance.origin()) {
            crumb_holder.insert(o.generation, dn.node);
        }
    }

    let mut generations = Vec::new();
    for dn in document.nodes.iter().filter(|n| n.font == FontClass::Sans) {
        let lineage = dn.node;
        let original = h
            .original(lineage)
            .and_then(Node::as_text)
            .ok_or(ControllerError::UnknownNode(lineage))?;
        let origin = original
            .provenance
            .origin()
            .ok_or(ControllerError::UnknownNode(lineage))?;
        let kind = *traces
            .kinds
            .get(&lineage)
            .ok_or(ControllerError::UnknownNode(lineage))?;
        let edits = traces
            .edits
            .get(&lineage)
            .filter(|e| !e.is_empty() && depth.keeps(settled_in(h, lineage), last_index))
            .cloned();
        let segments = match (profile.granularity, traces.segments.get(&lineage)) {
            (Granularity::Phrase, Some(s)) => node_segments(&origin.generated, &original.content, s),
            _ => Vec::new(),
        };

        let mut crumbs = Vec::new();
        let mut chain = Vec::new();
        if let Some(c) = chains.iter().find(|c| c.head() == lineage) {
            for (k, &link) in c.links[..c.links.len() - 1].iter().enumerate() {
                let rec = h
                    .original(link)
                    .and_then(Node::as_text)
                    .ok_or(ControllerError::UnknownNode(link))?;
                let generated = rec
                    .provenance
                    .origin()
                    .map(|o| o.generated.clone())
                    .unwrap_or_else(|| rec.content.clone());
                chain.push(ChainMember {
                    node: link,
                    version: c.versions[k],
                    generated,
                });
                crumbs.extend(crumb(h, link));
            }
        }
        if crumb_holder.get(&origin.generation) == Some(&lineage) {
            crumbs.extend(crumb(h, lineage));
        }

        generations.push(GenerationEntry {
            node: lineage,
            kind,
            original: original.content.clone(),
            edits,
            segments,
            chain,
            crumbs,
        });
    }

    let mut discards = Vec::new();
    for d in &traces.discards {
        let texts: Vec<String> = d
            .discarded
            .iter()
            .zip(&d.versions)
            .filter(|(_, &v)| depth.keeps(v, last_index))
            .filter_map(|(&node, _)| {
                let removal = h.removals().iter().find(|r| r.node == node)?;
                Some(h.record(removal.record)?.as_text()?.content.clone())
            })
            .collect();
        if !texts.is_empty() {
            discards.push(DiscardGroup {
                anchor: d.anchor,
                texts,
            });
        }
    }

    let mut feedback: Vec<FeedbackGroup> = Vec::new();
    for f in traces.feedback.iter().filter(|f| depth.keeps(f.version, last_index)) {
        let Some(target) = f.target else { continue };
        let text = h
            .original(f.orphan)
            .and_then(Node::as_text)
            .map(|t| t.content.clone())
            .ok_or(ControllerError::UnknownNode(f.orphan))?;
        let round = FeedbackRound {
            text,
            layer: f.layer,
            integrated: f.integrated,
        };
        match feedback.iter_mut().find(|g| g.target == target) {
            Some(g) => g.rounds.push(round),
            None => feedback.push(FeedbackGroup {
                target,
                rounds: vec![round],
            }),
        }
    }

    Ok(AggregatedTraceTree {
        document,
        granularity: profile.granularity,
        generations,
        discards,
        feedback,
    })
}
