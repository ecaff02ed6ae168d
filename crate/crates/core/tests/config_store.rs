use std::path::Path;
use std::sync::Arc;

use draftmarks_core::config::{ConfigError, EngineConfig};
use draftmarks_core::controller::{Channel, Granularity, PromptDetail, Role, TemporalDepth, Variant};
use draftmarks_core::fixtures;
use draftmarks_core::schema_io::parse_schema;
use draftmarks_core::store::{session_id, SessionStore, StoreError};

fn parse(text: &str) -> Result<EngineConfig, ConfigError> {
    EngineConfig::from_toml_str(text, Path::new("inline.toml"))
}

#[test]
fn empty_config_is_the_default() {
    assert_eq!(parse("").unwrap(), EngineConfig::default());
}

#[test]
fn thresholds_and_profiles_parse() {
    let c = parse(
        r#"
        listen = "0.0.0.0:9000"

        [thresholds]
        tonal_overlap = 0.7
        deletion = 12

        [profiles.reviewer]
        temporal_depth = "unbounded"
        granularity = "paragraph"

        [profiles.teacher]
        temporal_depth = 2
        prompt_detail = "instruction-only"
        variants = { masking-tape = ["single", "torn"], font = ["sans"] }
        "#,
    )
    .unwrap();
    assert_eq!(c.listen, "0.0.0.0:9000");
    assert_eq!(c.thresholds.tonal_overlap, 0.7);
    assert_eq!(c.thresholds.deletion, 12);
    assert_eq!(c.thresholds.min_prompt_run, 3);
    let r = c.profiles.profile(Role::Reviewer);
    assert_eq!(r.temporal_depth, TemporalDepth::Unbounded);
    assert_eq!(r.granularity, Granularity::Paragraph);
    assert_eq!(r.prompt_detail, PromptDetail::InstructionOnly);
    let t = c.profiles.profile(Role::Teacher);
    assert_eq!(t.temporal_depth, TemporalDepth::Versions(2));
    assert!(t.allows(Channel::MaskingTape, Variant::Torn));
    assert!(!t.allows(Channel::MaskingTape, Variant::Stacked));
    assert!(!t.allows_channel(Channel::Smudge));
    // The writer inherits the teacher's overrides.
    let w = c.profiles.profile(Role::Writer);
    assert_eq!(w.role, Role::Writer);
    assert_eq!(w.variants, t.variants);
}

#[test]
fn bad_values_are_rejected() {
    assert!(matches!(
        parse("[thresholds]\ntonal_overlap = 1.5"),
        Err(ConfigError::OutOfRange { name: "tonal_overlap", .. })
    ));
    assert!(parse("[thresholds]\ndeletion = 0").is_err());
    assert!(parse("[thresholds]\nchain_overlap = 0.0").is_err());
    assert!(matches!(parse("bogus = 1"), Err(ConfigError::Parse { .. })));
    assert!(parse("[profiles.teacher]\nvariants = { font = [\"torn\"] }").is_err());
    assert!(parse("[profiles.nobody]\ngranularity = \"node\"").is_err());
    assert!(parse("[profiles.teacher]\ntemporal_depth = \"forever\"").is_err());
}

#[test]
fn profile_file_is_merged_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("profiles.toml"),
        "[profiles.general]\ntemporal_depth = 5\n",
    )
    .unwrap();
    let main = dir.path().join("engine.toml");
    std::fs::write(
        &main,
        "profiles_path = \"profiles.toml\"\n[profiles.general]\ngranularity = \"phrase\"\n",
    )
    .unwrap();
    let c = EngineConfig::load(&main).unwrap();
    let g = c.profiles.profile(Role::GeneralReader);
    assert_eq!(g.temporal_depth, TemporalDepth::Versions(5));
    assert_eq!(g.granularity, Granularity::Phrase);
    assert!(matches!(
        EngineConfig::load(&dir.path().join("missing.toml")),
        Err(ConfigError::Io { .. })
    ));
}

#[test]
fn fingerprint_tracks_effective_settings() {
    let a = EngineConfig::default();
    let mut b = a.clone();
    b.listen = "127.0.0.1:1".into();
    assert_eq!(a.fingerprint(), b.fingerprint());
    b.thresholds.tonal_overlap = 0.5;
    assert_ne!(a.fingerprint(), b.fingerprint());
    assert_eq!(a.fingerprint().len(), 64);
}

fn store() -> (tempfile::TempDir, SessionStore) {
    let dir = tempfile::tempdir().unwrap();
    let s = SessionStore::open(dir.path(), EngineConfig::default()).unwrap();
    (dir, s)
}

#[test]
fn ingest_is_content_addressed_and_idempotent() {
    let (_dir, s) = store();
    let log = fixtures::lavender().to_jsonl();
    let (id, first) = s.store_session(log.as_bytes()).unwrap();
    assert!(first.created);
    assert_eq!(id, session_id(log.as_bytes()));
    let (again, second) = s.store_session(log.as_bytes()).unwrap();
    assert_eq!(id, again);
    assert!(!second.created);
    assert_eq!(s.raw_log(&id).unwrap(), log.as_bytes());
}

#[test]
fn bad_logs_leave_nothing_behind() {
    let (dir, s) = store();
    let err = s.store_session(b"{\"nope\":1}\n").unwrap_err();
    assert!(err.is_client_error());
    let mut log = fixtures::bruce();
    log.consent = false;
    assert!(s.store_session(log.to_jsonl().as_bytes()).unwrap_err().is_client_error());
    let entries = std::fs::read_dir(dir.path().join("sessions")).unwrap().count();
    assert_eq!(entries, 0);
}

#[test]
fn unknown_and_malformed_ids_are_not_found() {
    let (_dir, s) = store();
    assert!(matches!(s.get_schema(&"a".repeat(64), Role::Teacher), Err(StoreError::NotFound(_))));
    assert!(matches!(s.raw_log("../../etc/passwd"), Err(StoreError::NotFound(_))));
    assert!(!s.exists("ABC"));
}

#[test]
fn schemas_are_cached_and_valid() {
    let (dir, s) = store();
    let (id, _) = s.store_session(fixtures::matilda().to_jsonl().as_bytes()).unwrap();
    for role in Role::ALL {
        let a = s.get_schema(&id, role).unwrap();
        let b = s.get_schema(&id, role).unwrap();
        assert_eq!(a, b);
        let schema = parse_schema(&a).unwrap();
        assert_eq!(schema.session, id);
        assert_eq!(schema.role, role);
        assert!(s.get_export(&id, role).unwrap().starts_with("<!DOCTYPE html>"));
    }
    // A corrupted cache entry is rebuilt, not served.
    let session_dir = dir.path().join("sessions").join(&id);
    let cached = std::fs::read_dir(&session_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with("-teacher.json"))
        .unwrap();
    let good = std::fs::read(&cached).unwrap();
    std::fs::write(&cached, b"garbage").unwrap();
    assert_eq!(s.get_schema(&id, Role::Teacher).unwrap(), good);
    // Same for the replayed history.
    let history = std::fs::read_dir(&session_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("history-"))
        .unwrap();
    std::fs::write(&history, b"{").unwrap();
    assert_eq!(s.history(&id).unwrap().version_count(), {
        draftmarks_core::ingest::replay_session(&fixtures::matilda())
            .unwrap()
            .version_count()
    });
}

#[test]
fn concurrent_ingest_and_reads_agree() {
    let (_dir, s) = store();
    let s = Arc::new(s);
    let log = fixtures::matilda().to_jsonl();
    let handles: Vec<_> = (0..8)
        .map(|k| {
            let s = Arc::clone(&s);
            let log = log.clone();
            std::thread::spawn(move || {
                let (id, stored) = s.store_session(log.as_bytes()).unwrap();
                let role = Role::ALL[k % Role::ALL.len()];
                let bytes = s.get_schema(&id, role).unwrap();
                (id, stored.created, bytes, role)
            })
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(results.iter().filter(|r| r.1).count(), 1);
    for (id, _, bytes, role) in &results {
        assert_eq!(id, &results[0].0);
        assert_eq!(bytes, &s.get_schema(id, *role).unwrap());
    }
}

#[test]
fn config_change_rebuilds_instead_of_reusing_caches() {
    let dir = tempfile::tempdir().unwrap();
    let a = SessionStore::open(dir.path(), EngineConfig::default()).unwrap();
    let (id, _) = a.store_session(fixtures::lavender().to_jsonl().as_bytes()).unwrap();
    let before = a.get_schema(&id, Role::Teacher).unwrap();

    let mut config = EngineConfig::default();
    config.thresholds.chain_overlap = 0.99;
    let b = SessionStore::open(dir.path(), config).unwrap();
    assert!(b.exists(&id));
    let after = b.get_schema(&id, Role::Teacher).unwrap();
    assert_ne!(before, after);
    let schemas = std::fs::read_dir(dir.path().join("sessions").join(&id))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("schema-"))
        .count();
    assert_eq!(schemas, 2);
    assert_eq!(a.get_schema(&id, Role::Teacher).unwrap(), before);
}
