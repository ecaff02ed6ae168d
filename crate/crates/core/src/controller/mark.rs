use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::NodeId;

use super::{Channel, Variant};

/// A value in [0, 1] held as ten-thousandths, so it survives the 4-decimal
/// text form unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Intensity(u16);

impl Intensity {
    pub const SCALE: u16 = 10_000;

    pub fn from_score(score: f64) -> Self {
        let clamped = if score.is_nan() { 0.0 } else { score.clamp(0.0, 1.0) };
        Intensity((clamped * Self::SCALE as f64).round() as u16)
    }

    pub fn from_ticks(ticks: u16) -> Option<Self> {
        (ticks <= Self::SCALE).then_some(Intensity(ticks))
    }

    pub fn ticks(self) -> u16 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }
}

impl Serialize for Intensity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Intensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(serde::de::Error::custom(format!("intensity {v} outside [0, 1]")));
        }
        Ok(Intensity::from_score(v))
    }
}

/// Where a mark sits in the shipped document. Offsets are code points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MarkAnchor {
    /// A range covering (part of) a node of the final document.
    Span { node: NodeId, start: usize, end: usize },
    /// A point in the margin next to a document offset.
    Margin { offset: usize },
}

impl MarkAnchor {
    pub fn start(&self) -> usize {
        match *self {
            MarkAnchor::Span { start, .. } => start,
            MarkAnchor::Margin { offset } => offset,
        }
    }

    pub fn end(&self) -> usize {
        match *self {
            MarkAnchor::Span { end, .. } => end,
            MarkAnchor::Margin { offset } => offset,
        }
    }
}

/// A stretch of a tape or smudge, in document offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub start: usize,
    pub end: usize,
    pub from_prompt: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub text: String,
    pub layer: usize,
    pub integrated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkPayload {
    None,
    /// Tape and smudge content.
    Generation {
        /// Generations in this iteration stack, the visible one included.
        layers: usize,
        /// Generated text of earlier iterations, oldest first.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        stack: Vec<String>,
        /// Text as it was inserted, before the writer edited it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        original: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        segments: Vec<SegmentSpan>,
    },
    Prompt {
        instruction: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context: Option<String>,
    },
    Discards {
        texts: Vec<String>,
    },
    Feedback {
        entries: Vec<FeedbackEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mark {
    pub channel: Channel,
    pub variant: Variant,
    pub anchor: MarkAnchor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<Intensity>,
    pub payload: MarkPayload,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Mark>,
}

impl Mark {
    pub fn new(channel: Channel, variant: Variant, anchor: MarkAnchor) -> Self {
        Mark {
            channel,
            variant,
            anchor,
            intensity: None,
            payload: MarkPayload::None,
            children: Vec::new(),
        }
    }

    /// CSS class list naming this mark: channel then variant.
    pub fn class_name(&self) -> String {
        format!("{} {}", self.channel.as_str(), self.variant.as_str())
    }

    /// This mark and all descendants, pre-order.
    pub fn walk(&self) -> Vec<&Mark> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    fn order(&self, other: &Mark) -> Ordering {
        (self.anchor.start(), std::cmp::Reverse(self.anchor.end()), self.channel, self.variant)
            .cmp(&(other.anchor.start(), std::cmp::Reverse(other.anchor.end()), other.channel, other.variant))
            .then_with(|| {
                let a = serde_json::to_string(self).unwrap_or_default();
                let b = serde_json::to_string(other).unwrap_or_default();
                a.cmp(&b)
            })
    }
}

/// Put marks and their children in canonical order: by position, widest
/// first, then channel and variant.
pub fn sort_marks(marks: &mut [Mark]) {
    for m in marks.iter_mut() {
        sort_marks(&mut m.children);
    }
    marks.sort_by(Mark::order);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intensity_round_trips_through_four_decimals() {
        for ticks in [0u16, 1, 106, 5000, 9999, 10000] {
            let i = Intensity::from_ticks(ticks).unwrap();
            let text = format!("{:.4}", i.value());
            let back: Intensity = serde_json::from_str(&text).unwrap();
            assert_eq!(back, i);
        }
        assert_eq!(Intensity::from_score(1.7).ticks(), 10_000);
        assert!(serde_json::from_str::<Intensity>("1.5").is_err());
    }

    #[test]
    fn class_name_is_channel_then_variant() {
        let m = Mark::new(Channel::ResidualGlue, Variant::Sequenced, MarkAnchor::Margin { offset: 0 });
        assert_eq!(m.class_name(), "residual-glue sequenced");
    }

    #[test]
    fn sorting_ignores_construction_order() {
        let a = Mark::new(Channel::Font, Variant::Sans, MarkAnchor::Span { node: NodeId(1), start: 0, end: 4 });
        let b = Mark::new(Channel::MaskingTape, Variant::Single, MarkAnchor::Span { node: NodeId(1), start: 0, end: 4 });
        let c = Mark::new(Channel::ResidualGlue, Variant::Single, MarkAnchor::Margin { offset: 2 });
        let mut x = vec![c.clone(), a.clone(), b.clone()];
        let mut y = vec![b, c, a];
        sort_marks(&mut x);
        sort_marks(&mut y);
        assert_eq!(x, y);
        assert_eq!(x[0].channel, Channel::MaskingTape);
    }
}
