use serde::{Deserialize, Serialize};

use crate::model::{AiSource, PromptRecord, TextNode};
use crate::text::{lcs_pairs, tokenize};

use super::TraceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentOrigin {
    FromPrompt,
    NovelAi,
}

/// Code-point range of the generated text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub origin: SegmentOrigin,
    pub start: usize,
    pub end: usize,
}

/// Split a node's full generation into prompt-derived and novel stretches.
///
/// Generated words are aligned against instruction and context words by a
/// longest common subsequence; maximal runs that are contiguous on both
/// sides and at least `min_run` words long are prompt-derived. The segments
/// tile the generation exactly.
pub fn segment_against_prompt(node: &TextNode, min_run: usize) -> Result<Vec<Segment>, TraceError> {
    let origin = node.provenance.origin().ok_or(TraceError::NotAi(node.id))?;
    let len = origin.generated.chars().count();
    if origin.source == AiSource::ExternalPaste {
        return Ok(tile(len, Vec::new()));
    }
    Ok(segment_text(&origin.generated, &origin.prompt, min_run))
}

pub(crate) fn segment_text(generated: &str, prompt: &PromptRecord, min_run: usize) -> Vec<Segment> {
    let len = generated.chars().count();
    let gen = tokenize(generated);
    let instruction = tokenize(&prompt.instruction);
    let context = prompt.context.as_deref().map(tokenize).unwrap_or_default();

    let a: Vec<&str> = gen.iter().map(|t| t.word.as_str()).collect();
    // A barrier keeps runs from straddling instruction and context.
    let b: Vec<Option<&str>> = instruction
        .iter()
        .map(|t| Some(t.word.as_str()))
        .chain(std::iter::once(None))
        .chain(context.iter().map(|t| Some(t.word.as_str())))
        .collect();

    let pairs = lcs_pairs(&a, &b);
    let mut from_prompt = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        while j + 1 < pairs.len()
            && pairs[j + 1].0 == pairs[j].0 + 1
            && pairs[j + 1].1 == pairs[j].1 + 1
        {
            j += 1;
        }
        if j - i + 1 >= min_run.max(1) {
            from_prompt.push((gen[pairs[i].0].start, gen[pairs[j].0].end));
        }
        i = j + 1;
    }
    tile(len, from_prompt)
}

fn tile(len: usize, from_prompt: Vec<(usize, usize)>) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for (start, end) in from_prompt {
        if start > cursor {
            out.push(Segment {
                origin: SegmentOrigin::NovelAi,
                start: cursor,
                end: start,
            });
        }
        out.push(Segment {
            origin: SegmentOrigin::FromPrompt,
            start,
            end,
        });
        cursor = end;
    }
    if cursor < len {
        out.push(Segment {
            origin: SegmentOrigin::NovelAi,
            start: cursor,
            end: len,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: &str, c: Option<&str>) -> PromptRecord {
        PromptRecord::new(i, c.map(str::to_string)).unwrap()
    }

    #[test]
    fn disjoint_vocabulary_is_one_novel_segment() {
        let s = segment_text("Bright lanterns swayed overhead.", &p("describe a storm", None), 3);
        assert_eq!(
            s,
            vec![Segment {
                origin: SegmentOrigin::NovelAi,
                start: 0,
                end: 32
            }]
        );
    }

    #[test]
    fn verbatim_context_is_one_prompt_segment() {
        let ctx = "She closed the door and finally smiled.";
        let s = segment_text(ctx, &p("polish", Some(ctx)), 3);
        assert_eq!(
            s,
            vec![Segment {
                origin: SegmentOrigin::FromPrompt,
                start: 0,
                end: ctx.chars().count()
            }]
        );
    }

    #[test]
    fn short_matches_stay_novel() {
        let s = segment_text("the cat ran home", &p("the cat", None), 3);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].origin, SegmentOrigin::NovelAi);
    }

    #[test]
    fn empty_generation_has_no_segments() {
        assert!(segment_text("", &p("x", None), 3).is_empty());
    }
}
