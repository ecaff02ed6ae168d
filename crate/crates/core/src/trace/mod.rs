//! Collaboration traces derived from a [`DocumentHistory`]: what kind of
//! generation each AI node is, which parts of it echo the prompt, iteration
//! chains, discarded generations, human edits inside AI text, and whether
//! feedback was acted on.

mod chains;
mod edits;
mod segment;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Thresholds;
use crate::model::{
    AiSource, DocumentHistory, Node, NodeId, PromptRecord, TextNode, Version, ROOT,
};
use crate::text::{containment, normalized_word_distance, tokenize};

pub use chains::{detect_iteration_chains, IterationChain, Position};
pub use edits::{detect_intranode_edits, EditTrace};
pub use segment::{segment_against_prompt, Segment, SegmentOrigin};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("node {0} is not AI-authored")]
    NotAi(NodeId),
    #[error("node {0} is not in the final version")]
    NotInFinal(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not an orphan generation")]
    NotOrphan(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationKind {
    NewContent,
    TonalShift,
    Feedback,
}

pub fn classify_generation(
    node: &TextNode,
    thresholds: &Thresholds,
) -> Result<GenerationKind, TraceError> {
    let origin = node.provenance.origin().ok_or(TraceError::NotAi(node.id))?;
    if node.orphan {
        return Ok(GenerationKind::Feedback);
    }
    if origin.source == AiSource::ExternalPaste {
        return Ok(GenerationKind::NewContent);
    }
    match origin.prompt.context() {
        Some(context) if containment(&origin.generated, context) >= thresholds.tonal_overlap => {
            Ok(GenerationKind::TonalShift)
        }
        _ => Ok(GenerationKind::NewContent),
    }
}

/// Where a discard trace attaches in the final document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardAnchor {
    /// Right after a surviving node.
    After(NodeId),
    /// At the start of a surviving structural node.
    Start(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardTrace {
    /// Removed AI nodes at one anchor, by removal version.
    pub discarded: Vec<NodeId>,
    pub versions: Vec<usize>,
    pub anchor: DiscardAnchor,
}

/// Removed AI nodes grouped by anchor, skipping nodes superseded by a
/// surviving later link of their iteration chain.
pub fn detect_discards(h: &DocumentHistory, chains: &[IterationChain]) -> Vec<DiscardTrace> {
    let last = h.current();
    let superseded = |node: NodeId| {
        chains.iter().any(|c| {
            c.links.contains(&node) && c.links.last().is_some_and(|&head| last.contains(head))
        })
    };
    let mut traces: Vec<DiscardTrace> = Vec::new();
    for r in h.removals() {
        if last.contains(r.node) || superseded(r.node) {
            continue;
        }
        let anchor = resolve_anchor(last, &r.path);
        match traces.iter_mut().find(|t| t.anchor == anchor) {
            Some(t) => {
                t.discarded.push(r.node);
                t.versions.push(r.version);
            }
            None => traces.push(DiscardTrace {
                discarded: vec![r.node],
                versions: vec![r.version],
                anchor,
            }),
        }
    }
    traces
}

fn resolve_anchor(last: &Version, path: &[crate::model::RemovalLevel]) -> DiscardAnchor {
    for level in path {
        if let Some(&p) = level.preceding.iter().find(|&&p| last.contains(p)) {
            return DiscardAnchor::After(p);
        }
        if last.contains(level.parent) {
            return DiscardAnchor::Start(level.parent);
        }
    }
    DiscardAnchor::Start(ROOT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackTrace {
    pub orphan: NodeId,
    /// Structural node the feedback was about; `None` when it cannot be
    /// resolved at request time or in the final version.
    pub target: Option<NodeId>,
    pub integrated: bool,
    /// 1 for the first feedback round on a target, 2 for the second, ...
    pub layer: usize,
    pub version: usize,
    /// Normalized word edit distance between the target then and now.
    pub distance: f64,
}

impl FeedbackTrace {
    pub fn untargeted(&self) -> bool {
        self.target.is_none()
    }
}

pub fn detect_feedback_integration(
    h: &DocumentHistory,
    orphan: NodeId,
    thresholds: &Thresholds,
) -> Result<FeedbackTrace, TraceError> {
    let pos = h
        .orphans()
        .iter()
        .position(|o| o.node == orphan)
        .ok_or(TraceError::NotOrphan(orphan))?;
    let record = &h.orphans()[pos];
    let layer = 1 + h.orphans()[..pos]
        .iter()
        .filter(|o| o.target.is_some() && o.target == record.target)
        .count();
    let last = h.current();
    let now = record
        .target
        .filter(|&t| matches!(h.resolve_in(last, t), Some(Node::Structural(_))))
        .and_then(|t| h.plain_text_in(last, t));
    let (target, distance) = match (&record.target_text, now) {
        (Some(then), Some(now)) => (record.target, normalized_word_distance(then, &now)),
        _ => (None, 0.0),
    };
    Ok(FeedbackTrace {
        orphan,
        target,
        integrated: target.is_some() && distance >= thresholds.feedback_integration,
        layer,
        version: record.version,
        distance,
    })
}

/// Prompt complexity in [0, 1], rendered as crumb shade.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PromptComplexity(f64);

impl PromptComplexity {
    pub fn score(self) -> f64 {
        self.0
    }
}

/// Half from instruction length (saturating at 50 words), half from the
/// presence of context.
pub fn score_prompt_complexity(prompt: &PromptRecord) -> PromptComplexity {
    let words = tokenize(&prompt.instruction).len() as f64;
    let context = if prompt.context().is_some() { 1.0 } else { 0.0 };
    PromptComplexity(0.5 * (words / 50.0).min(1.0) + 0.5 * context)
}

/// Every trace of one history.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    /// Every AI node ever created: inserted, removed, and orphaned.
    pub kinds: BTreeMap<NodeId, GenerationKind>,
    pub segments: BTreeMap<NodeId, Vec<Segment>>,
    pub chains: Vec<IterationChain>,
    pub discards: Vec<DiscardTrace>,
    /// AI nodes present in the final version.
    pub edits: BTreeMap<NodeId, EditTrace>,
    pub feedback: Vec<FeedbackTrace>,
}

/// Lineages of every AI text node, inserted ones first in insertion order,
/// then orphans.
pub fn ai_nodes(h: &DocumentHistory) -> Vec<NodeId> {
    h.insertions()
        .iter()
        .flat_map(|i| i.nodes.iter().copied())
        .chain(h.orphans().iter().map(|o| o.node))
        .collect()
}

pub fn analyze(h: &DocumentHistory, thresholds: &Thresholds) -> Result<TraceSet, TraceError> {
    let mut set = TraceSet::default();
    let last = h.current();
    for lineage in ai_nodes(h) {
        let node = h
            .original(lineage)
            .and_then(Node::as_text)
            .ok_or(TraceError::UnknownNode(lineage))?;
        set.kinds.insert(lineage, classify_generation(node, thresholds)?);
        set.segments
            .insert(lineage, segment_against_prompt(node, thresholds.min_prompt_run)?);
        if last.contains(lineage) {
            set.edits.insert(lineage, detect_intranode_edits(h, lineage)?);
        }
    }
    set.chains = detect_iteration_chains(h, thresholds);
    set.discards = detect_discards(h, &set.chains);
    set.feedback = h
        .orphans()
        .iter()
        .map(|o| detect_feedback_integration(h, o.node, thresholds))
        .collect::<Result<_, _>>()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Authorship, ChildPos};

    fn prompt(i: &str, c: Option<&str>) -> PromptRecord {
        PromptRecord::new(i, c.map(str::to_string)).unwrap()
    }

    #[test]
    fn complexity_formula_points() {
        let one = score_prompt_complexity(&prompt("Rewrite", None)).score();
        assert!((one - 0.01).abs() < 1e-12);
        let long = "word ".repeat(60);
        let full = score_prompt_complexity(&prompt(&long, Some("ctx"))).score();
        assert_eq!(full, 1.0);
        let blank_ctx = score_prompt_complexity(&prompt("Rewrite", Some("  "))).score();
        assert!((blank_ctx - 0.01).abs() < 1e-12);
    }

    #[test]
    fn classify_rejects_human_nodes() {
        let mut h = DocumentHistory::new();
        let ins = h
            .insert_node(ChildPos::append(ROOT), "mine", Authorship::Human, None)
            .unwrap();
        let node = h.text(ins.text_nodes[0]).unwrap();
        assert_eq!(
            classify_generation(node, &Thresholds::default()),
            Err(TraceError::NotAi(ins.text_nodes[0]))
        );
    }

    #[test]
    fn orphan_is_feedback() {
        let mut h = DocumentHistory::new();
        let id = h.record_orphan("Consider expanding.", prompt("Give feedback", None), None);
        let node = h.original(id).and_then(Node::as_text).unwrap();
        assert_eq!(
            classify_generation(node, &Thresholds::default()),
            Ok(GenerationKind::Feedback)
        );
    }

    #[test]
    fn transition_request_is_new_content() {
        let para = "I was afraid of the dark for most of my childhood. Every night my \
                    brother laughed at me while I hid under the blanket.";
        let mut h = DocumentHistory::new();
        let ins = h
            .insert_node(
                ChildPos::append(ROOT),
                "Moving from fear to understanding requires looking back to when it started.",
                Authorship::ai(
                    prompt("write a transition from paragraph 1", Some(para)),
                    "Moving from fear to understanding requires looking back to when it started.",
                ),
                None,
            )
            .unwrap();
        let node = h.text(ins.text_nodes[0]).unwrap();
        assert_eq!(
            classify_generation(node, &Thresholds::default()),
            Ok(GenerationKind::NewContent)
        );
    }

    #[test]
    fn paraphrase_with_two_swaps_is_tonal_shift() {
        // 11 distinct words, 2 swapped: containment 9/11 >= 0.6.
        let context = "The old house stood quietly at the end of our narrow street";
        let generated = "The old home stood silently at the end of our narrow street";
        let mut h = DocumentHistory::new();
        let ins = h
            .insert_node(
                ChildPos::append(ROOT),
                generated,
                Authorship::ai(prompt("make this sound calmer", Some(context)), generated),
                None,
            )
            .unwrap();
        let node = h.text(ins.text_nodes[0]).unwrap();
        assert!((containment(generated, context) - 9.0 / 11.0).abs() < 1e-12);
        assert_eq!(
            classify_generation(node, &Thresholds::default()),
            Ok(GenerationKind::TonalShift)
        );
    }
}
