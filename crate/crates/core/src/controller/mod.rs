//! Turns a history and its traces into a role-specific process schema:
//! choose the role's profile, keep the traces it asks for, and map them to
//! marks.

mod aggregate;
mod annotate;
mod document;
mod mark;
mod profile;
mod schema;

use thiserror::Error;

use crate::model::NodeId;
use crate::trace::TraceError;

pub use aggregate::{
    aggregate_traces, AggregatedTraceTree, ChainMember, CrumbSource, DiscardGroup, FeedbackGroup,
    FeedbackRound, GenerationEntry, NodeSegment,
};
pub use annotate::annotate_traces;
pub use document::{
    layout_document, DocumentBlock, DocumentNode, FontClass, SchemaDocument, BLOCK_SEPARATOR,
};
pub use mark::{
    sort_marks, FeedbackEntry, Intensity, Mark, MarkAnchor, MarkPayload, SegmentSpan,
};
pub use profile::{
    intent_profile, Channel, Granularity, IntentProfile, ProfileOverride, ProfileTable,
    PromptDetail, Role, TemporalDepth, UnknownRole, Variant,
};
pub use schema::{build_process_schema, ProcessSchema, SchemaViolation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("trace refers to unknown node {0}")]
    UnknownNode(NodeId),
}
