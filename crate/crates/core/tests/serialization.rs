use std::collections::BTreeSet;

use draftmarks_core::config::EngineConfig;
use draftmarks_core::controller::{
    build_process_schema, Channel, Mark, MarkAnchor, Role, Variant,
};
use draftmarks_core::fixtures;
use draftmarks_core::ingest::replay_session;
use draftmarks_core::schema_io::{
    canonical_json, checksum, class_name, envelope, export_classes, export_static_document, parse_schema,
    serialize_schema, strip_tags, SchemaIoError,
};
use draftmarks_testkit::checks::{check_round_trip, check_tamper_rejected, fixture_schemas};
use draftmarks_testkit::random_schema;
use serde_json::{json, Value};

#[test]
fn fixture_schemas_round_trip() {
    for (name, s) in fixture_schemas() {
        check_round_trip(&name, &s);
    }
}

#[test]
fn fuzzed_schemas_round_trip() {
    for seed in 0..200 {
        let s = random_schema(seed);
        s.validate().unwrap_or_else(|e| panic!("seed {seed}: generator made {e}"));
        check_round_trip(&format!("seed {seed}"), &s);
    }
}

#[test]
fn mark_order_does_not_change_bytes() {
    for seed in 0..50 {
        let s = random_schema(seed);
        let mut shuffled = s.clone();
        shuffled.marks.reverse();
        assert_eq!(serialize_schema(&s), serialize_schema(&shuffled));
    }
}

#[test]
fn canonical_json_sorts_keys_and_fixes_floats() {
    let v = json!({"b": 1, "a": {"z": [true, null], "y": 0.5}, "c": "é\n"});
    assert_eq!(canonical_json(&v), r#"{"a":{"y":0.5000,"z":[true,null]},"b":1,"c":"é\n"}"#);
}

fn reencode(v: &Value) -> Vec<u8> {
    canonical_json(v).into_bytes()
}

#[test]
fn tampered_envelopes_are_rejected() {
    for (_, s) in fixture_schemas() {
        check_tamper_rejected(&s);
    }
    for seed in 0..20 {
        check_tamper_rejected(&random_schema(seed));
    }
    assert!(matches!(parse_schema(b"{}"), Err(SchemaIoError::Malformed(_))));
}

#[test]
fn a_correctly_signed_but_noncompliant_schema_is_rejected() {
    let h = replay_session(&fixtures::matilda()).unwrap();
    let mut s = build_process_schema(&h, Role::Reviewer, &EngineConfig::default()).unwrap();
    s.marks.push(Mark::new(
        Channel::ResidualGlue,
        Variant::Sequenced,
        MarkAnchor::Margin { offset: 0 },
    ));
    let v = serde_json::to_value(envelope(&s)).unwrap();
    assert_eq!(v["checksum"], json!(checksum(&s)));
    assert!(matches!(parse_schema(&reencode(&v)), Err(SchemaIoError::Invalid(_))));
}

#[test]
fn intensity_out_of_range_is_rejected() {
    let s = random_schema(7);
    let mut v: Value = serde_json::from_slice(&serialize_schema(&s)).unwrap();
    v["schema"]["marks"] = json!([{
        "channel": "eraser-crumb", "variant": "solid",
        "anchor": {"type": "margin", "offset": 0},
        "intensity": 1.5, "payload": {"kind": "none"}
    }]);
    assert!(parse_schema(&reencode(&v)).is_err());
}

#[test]
fn export_text_equals_document_text() {
    for (name, s) in fixture_schemas() {
        let html = export_static_document(&s);
        assert_eq!(strip_tags(&html), s.document.text, "{name}");
        assert!(!html.contains("<script"));
    }
    for seed in 0..200 {
        let s = random_schema(seed);
        let html = export_static_document(&s);
        assert_eq!(strip_tags(&html), s.document.text, "seed {seed}");
    }
}

#[test]
fn export_carries_every_mark_class() {
    let vocabulary: BTreeSet<String> = Channel::ALL
        .iter()
        .flat_map(|&c| c.variants().iter().map(move |&v| class_name(c, v)))
        .collect();
    for (name, s) in fixture_schemas() {
        let html = export_static_document(&s);
        let classes: BTreeSet<String> = export_classes(&html).into_iter().collect();
        for m in s.all_marks() {
            assert!(classes.contains(&m.class_name()), "{name}: {}", m.class_name());
        }
        for c in &classes {
            assert!(
                vocabulary.contains(c) || ["document", "payload"].contains(&c.as_str()) || c.starts_with("role-"),
                "{name}: unexpected class {c}"
            );
        }
    }
    let matilda = &fixture_schemas()[0].1;
    let html = export_static_document(matilda);
    assert!(export_classes(&html).iter().any(|c| c == "residual-glue sequenced"));
}

#[test]
fn export_escapes_payload_text() {
    for seed in 0..200 {
        let s = random_schema(seed);
        let html = export_static_document(&s);
        let body = &html[html.find("<body").unwrap()..];
        assert!(!body.contains("<b>"), "seed {seed}");
    }
}
