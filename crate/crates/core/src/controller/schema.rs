use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::model::DocumentHistory;
use crate::trace::analyze;

use super::aggregate::aggregate_traces;
use super::annotate::annotate_traces;
use super::document::SchemaDocument;
use super::mark::{Mark, MarkAnchor, MarkPayload};
use super::{ControllerError, IntentProfile, PromptDetail, Role};

/// Everything a reader of one role gets to see about a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessSchema {
    pub session: String,
    pub role: Role,
    pub config_fingerprint: String,
    pub profile: IntentProfile,
    pub document: SchemaDocument,
    pub marks: Vec<Mark>,
}

pub fn build_process_schema(
    h: &DocumentHistory,
    role: Role,
    config: &EngineConfig,
) -> Result<ProcessSchema, ControllerError> {
    let profile = config.profiles.profile(role);
    let traces = analyze(h, &config.thresholds)?;
    let tree = aggregate_traces(h, &traces, &profile)?;
    let marks = annotate_traces(&tree, &profile)?;
    Ok(ProcessSchema {
        session: String::new(),
        role,
        config_fingerprint: config.fingerprint(),
        profile,
        document: tree.document,
        marks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaViolation {
    #[error("profile is for {profile}, schema is for {role}")]
    RoleMismatch { role: Role, profile: Role },
    #[error("{0}")]
    Profile(String),
    #[error("mark `{class}` is not allowed for {role}")]
    VariantNotAllowed { class: String, role: Role },
    #[error("`{0}` is not a variant of its channel")]
    UnknownVariant(String),
    #[error("`{child}` cannot be nested in `{parent}`")]
    BadNesting { parent: String, child: String },
    #[error("mark `{class}` at {start}..{end} lies outside the document")]
    SpanOutOfDocument { class: String, start: usize, end: usize },
    #[error("mark `{class}` carries prompt context or earlier generations, which {role} may not see")]
    PayloadTooDetailed { class: String, role: Role },
    #[error("document node table does not match the document text")]
    BadDocument,
}

impl ProcessSchema {
    /// Check the schema against its own profile and document.
    pub fn validate(&self) -> Result<(), SchemaViolation> {
        if self.profile.role != self.role {
            return Err(SchemaViolation::RoleMismatch {
                role: self.role,
                profile: self.profile.role,
            });
        }
        self.profile
            .validate()
            .map_err(|e| SchemaViolation::Profile(e.to_string()))?;
        let len = self.document.len();
        if self
            .document
            .nodes
            .iter()
            .map(|n| (n.start, n.end))
            .chain(self.document.blocks.iter().map(|b| (b.start, b.end)))
            .any(|(s, e)| s > e || e > len)
        {
            return Err(SchemaViolation::BadDocument);
        }
        for m in &self.marks {
            self.check_mark(m)?;
        }
        Ok(())
    }

    fn check_mark(&self, m: &Mark) -> Result<(), SchemaViolation> {
        let class = m.class_name();
        if !m.channel.variants().contains(&m.variant) {
            return Err(SchemaViolation::UnknownVariant(class));
        }
        if !self.profile.allows(m.channel, m.variant) {
            return Err(SchemaViolation::VariantNotAllowed {
                class,
                role: self.role,
            });
        }
        let inside = match m.anchor {
            MarkAnchor::Span { node, start, end } => self
                .document
                .range(node)
                .is_some_and(|(s, e)| s <= start && start <= end && end <= e),
            MarkAnchor::Margin { offset } => offset <= self.document.len(),
        };
        if !inside {
            return Err(SchemaViolation::SpanOutOfDocument {
                class,
                start: m.anchor.start(),
                end: m.anchor.end(),
            });
        }
        if let MarkPayload::Generation { segments, .. } = &m.payload {
            if segments
                .iter()
                .any(|s| s.start > s.end || s.start < m.anchor.start() || s.end > m.anchor.end())
            {
                return Err(SchemaViolation::SpanOutOfDocument {
                    class,
                    start: m.anchor.start(),
                    end: m.anchor.end(),
                });
            }
        }
        if self.profile.prompt_detail == PromptDetail::InstructionOnly {
            let leaks = match &m.payload {
                MarkPayload::Prompt { context, .. } => context.is_some(),
                MarkPayload::Generation { stack, .. } => !stack.is_empty(),
                _ => false,
            };
            if leaks {
                return Err(SchemaViolation::PayloadTooDetailed {
                    class,
                    role: self.role,
                });
            }
        }
        for c in &m.children {
            if !m.channel.may_contain(c.channel) {
                return Err(SchemaViolation::BadNesting {
                    parent: class,
                    child: c.class_name(),
                });
            }
            self.check_mark(c)?;
        }
        Ok(())
    }

    /// Every mark, nested ones included, pre-order.
    pub fn all_marks(&self) -> Vec<&Mark> {
        self.marks.iter().flat_map(Mark::walk).collect()
    }

    pub fn with_session(mut self, session: impl Into<String>) -> Self {
        self.session = session.into();
        self
    }
}
