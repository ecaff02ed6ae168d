use draftmarks_core::config::EngineConfig;
use draftmarks_core::controller::{
    build_process_schema, intent_profile, Channel, Granularity, MarkAnchor, MarkPayload,
    ProcessSchema, ProfileOverride, PromptDetail, Role, SchemaViolation, TemporalDepth, Variant,
};
use draftmarks_core::fixtures;
use draftmarks_core::ingest::{replay_session, SessionLog};
use draftmarks_testkit::checks::{check_hidden_contexts_on_fixtures, check_projection};
use draftmarks_testkit::{random_log, GenLimits};
use proptest::prelude::*;

fn schema_with(log: &SessionLog, role: Role, config: &EngineConfig) -> ProcessSchema {
    let h = replay_session(log).unwrap();
    build_process_schema(&h, role, config).unwrap()
}

#[test]
fn reviewer_sees_a_subset_without_context_on_fixtures() {
    for (_, log) in fixtures::all() {
        check_projection(&log);
    }
}

/// The contexts that only ever existed inside prompts must be searchable in
/// the teacher envelope, or the reviewer check proves nothing.
#[test]
fn hidden_contexts_reach_the_teacher_only() {
    check_hidden_contexts_on_fixtures();
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn reviewer_sees_a_subset_without_context_on_fuzzed_logs(seed in any::<u64>()) {
        check_projection(&random_log(seed, GenLimits::default()));
    }
}

#[test]
fn reviewer_gets_no_glue_and_no_ghost_text() {
    for (_, log) in fixtures::all() {
        let s = schema_with(&log, Role::Reviewer, &EngineConfig::default());
        for m in s.all_marks() {
            assert!(!matches!(
                m.channel,
                Channel::ResidualGlue | Channel::GhostText | Channel::Smudge | Channel::Stencil
            ));
        }
    }
}

#[test]
fn font_marks_cover_every_nonempty_node() {
    for (_, log) in fixtures::all() {
        let s = schema_with(&log, Role::GeneralReader, &EngineConfig::default());
        let fonts: Vec<_> = s.marks.iter().filter(|m| m.channel == Channel::Font).collect();
        let nonempty = s.document.nodes.iter().filter(|n| n.end > n.start).count();
        assert_eq!(fonts.len(), nonempty);
    }
}

#[test]
fn disallowed_variants_fall_back_or_drop() {
    let mut config = EngineConfig::default();
    let mut variants = intent_profile(Role::Teacher).variants;
    variants.insert(Channel::MaskingTape, [Variant::Single].into_iter().collect());
    variants.insert(Channel::ResidualGlue, [Variant::Single].into_iter().collect());
    variants.remove(&Channel::Smudge);
    config.profiles.set(
        Role::Teacher,
        ProfileOverride {
            variants: Some(variants),
            ..ProfileOverride::default()
        },
    );
    let s = schema_with(&fixtures::matilda(), Role::Teacher, &config);
    s.validate().unwrap();
    let tapes: Vec<_> = s.all_marks().into_iter().filter(|m| m.channel == Channel::MaskingTape).collect();
    assert!(tapes.len() >= 2);
    assert!(tapes.iter().all(|m| m.variant == Variant::Single));
    assert!(s
        .all_marks()
        .iter()
        .any(|m| m.channel == Channel::ResidualGlue && m.variant == Variant::Single));
    assert!(s.all_marks().iter().all(|m| m.channel != Channel::Smudge));
}

#[test]
fn temporal_depth_limits_history() {
    let mut config = EngineConfig::default();
    config.profiles.set(
        Role::Teacher,
        ProfileOverride {
            temporal_depth: Some(TemporalDepth::Versions(0)),
            ..ProfileOverride::default()
        },
    );
    let s = schema_with(&fixtures::matilda(), Role::Teacher, &config);
    assert!(s.all_marks().iter().all(|m| m.channel != Channel::ResidualGlue));
    let full = schema_with(&fixtures::matilda(), Role::Teacher, &EngineConfig::default());
    assert!(full.all_marks().iter().any(|m| m.channel == Channel::ResidualGlue));
}

#[test]
fn paragraph_granularity_spans_whole_blocks() {
    let mut config = EngineConfig::default();
    config.profiles.set(
        Role::Teacher,
        ProfileOverride {
            granularity: Some(Granularity::Paragraph),
            ..ProfileOverride::default()
        },
    );
    let s = schema_with(&fixtures::matilda(), Role::Teacher, &config);
    s.validate().unwrap();
    // Fonts describe authorship of each node and stay node-level.
    for m in s.all_marks().into_iter().filter(|m| m.channel != Channel::Font) {
        if let MarkAnchor::Span { node, start, end } = m.anchor {
            let b = s.document.block(node).unwrap_or_else(|| panic!("{} names {node}", m.class_name()));
            assert_eq!((start, end), (b.start, b.end));
        }
    }
}

#[test]
fn validation_rejects_profile_violations() {
    let log = fixtures::lavender();
    let mut s = schema_with(&log, Role::Teacher, &EngineConfig::default());
    s.profile = intent_profile(Role::Reviewer);
    assert!(matches!(s.validate(), Err(SchemaViolation::RoleMismatch { .. })));
    s.role = Role::Reviewer;
    assert!(s.validate().is_err());

    let mut s = schema_with(&log, Role::Reviewer, &EngineConfig::default());
    let tape = s
        .marks
        .iter_mut()
        .find(|m| m.channel == Channel::MaskingTape)
        .unwrap();
    if let MarkPayload::Generation { stack, .. } = &mut tape.payload {
        stack.push("earlier text".into());
    }
    assert!(matches!(s.validate(), Err(SchemaViolation::PayloadTooDetailed { .. })));

    let mut s = schema_with(&log, Role::Reviewer, &EngineConfig::default());
    s.profile.prompt_detail = PromptDetail::FullPrompt;
    s.validate().unwrap();
}
