use std::collections::BTreeSet;

use draftmarks_core::config::EngineConfig;
use draftmarks_core::controller::{build_process_schema, Channel, MarkPayload, ProcessSchema, Role, Variant};
use draftmarks_core::fixtures;
use draftmarks_core::ingest::{replay_session, SessionLog};
use draftmarks_testkit::checks::{
    check_bruce, check_lavender, check_matilda, complexity, generation_prompts, marks_of, taped_paragraphs,
};

fn schema(log: &SessionLog, role: Role) -> ProcessSchema {
    let h = replay_session(log).unwrap();
    build_process_schema(&h, role, &EngineConfig::default()).unwrap()
}

#[test]
fn matilda_glue_tapes_and_smudge() {
    check_matilda();
    let s = schema(&fixtures::matilda(), Role::Teacher);
    let glue = marks_of(&s, Channel::ResidualGlue);
    let MarkPayload::Discards { texts } = &glue[0].payload else {
        panic!("glue without discards")
    };
    assert_eq!(texts.len(), 2);
}

#[test]
fn matilda_crumb_shades_follow_prompt_complexity() {
    let log = fixtures::matilda();
    let s = schema(&log, Role::Teacher);
    let got: BTreeSet<u16> = marks_of(&s, Channel::EraserCrumb)
        .iter()
        .map(|m| m.intensity.unwrap().ticks())
        .collect();
    // The two discarded drafts leave no crumb; the three kept generations do.
    let want: BTreeSet<u16> = generation_prompts(&log)[2..]
        .iter()
        .map(|(i, c)| (complexity(i, c.as_deref()) * 10_000.0).round() as u16)
        .collect();
    assert_eq!(got, want);
}

#[test]
fn lavender_chain_stencils_and_crumbs() {
    check_lavender();
    let s = schema(&fixtures::lavender(), Role::Teacher);
    let stencils = marks_of(&s, Channel::Stencil);
    let lined = stencils.iter().filter(|m| m.variant == Variant::Lined).count();
    let dotted = stencils.iter().filter(|m| m.variant == Variant::Dotted).count();
    assert_eq!((lined, dotted), (2, 1));
    let tape = marks_of(&s, Channel::MaskingTape)
        .into_iter()
        .find(|m| m.variant == Variant::Stacked)
        .expect("stacked tape on the chain head");
    match &tape.payload {
        MarkPayload::Generation { layers, stack, .. } => {
            assert_eq!(*layers, 2);
            assert_eq!(stack.len(), 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn bruce_one_light_crumb_and_covered_paragraphs() {
    check_bruce();
    assert_eq!(taped_paragraphs(&schema(&fixtures::bruce(), Role::Teacher)), 3);
}

#[test]
fn fixture_documents_are_stable() {
    for (name, log) in fixtures::all() {
        let a = schema(&log, Role::Teacher);
        let b = schema(&log, Role::Teacher);
        assert_eq!(a, b, "{name}");
        assert!(!a.document.text.is_empty());
    }
}

#[test]
fn checked_in_fixture_files_are_current() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for (name, log) in fixtures::all() {
        let on_disk = std::fs::read_to_string(dir.join(format!("{name}.jsonl"))).unwrap();
        assert_eq!(on_disk, log.to_jsonl(), "{name}.jsonl is stale; run `draftmarks fixtures`");
    }
}
