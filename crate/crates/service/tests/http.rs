mod common;

use common::Server;
use draftmarks_core::controller::Role;
use draftmarks_core::fixtures;
use draftmarks_core::schema_io::{parse_schema, strip_tags};
use draftmarks_core::store::session_id;
use draftmarks_testkit::checks::{hidden_contexts, json_fragment};

#[test]
fn health_check() {
    let s = Server::start();
    let r = s.get("/v1/healthz");
    assert_eq!(r.status, 200);
    assert_eq!(r.json()["status"], "ok");
}

#[test]
fn ingest_is_idempotent() {
    let s = Server::start();
    let log = fixtures::bruce().to_jsonl();
    let first = s.post("/v1/sessions", log.clone());
    assert_eq!(first.status, 201);
    assert_eq!(first.content_type, "application/json");
    let id = first.json()["id"].as_str().unwrap().to_string();
    assert_eq!(id, session_id(log.as_bytes()));
    let again = s.post("/v1/sessions", log);
    assert_eq!(again.status, 200);
    assert_eq!(again.json()["id"], id.as_str());
}

#[test]
fn bad_logs_are_client_errors() {
    let s = Server::start();
    let r = s.post("/v1/sessions", "this is not a log");
    assert_eq!(r.status, 400);
    assert_eq!(r.content_type, "application/problem+json");
    assert_eq!(r.json()["status"], 400);
    let mut log = fixtures::matilda();
    log.consent = false;
    assert_eq!(s.post("/v1/sessions", log.to_jsonl()).status, 400);
}

#[test]
fn schemas_for_every_role() {
    let s = Server::start();
    for (name, log) in fixtures::all() {
        let id = s.ingest(&log.to_jsonl());
        for role in Role::ALL {
            let path = format!("/v1/sessions/{id}/schema?role={role}");
            let r = s.get(&path);
            assert_eq!(r.status, 200, "{name}/{role}: {}", r.text());
            assert_eq!(r.content_type, "application/json");
            let schema = parse_schema(&r.body).unwrap();
            assert_eq!(schema.role, role);
            assert_eq!(schema.session, id);
            assert_eq!(s.get(&path).body, r.body, "{name}/{role}: not byte-stable");

            let e = s.get(&format!("/v1/sessions/{id}/export?role={role}"));
            assert_eq!(e.status, 200);
            assert!(e.content_type.starts_with("text/html"));
            assert_eq!(strip_tags(&e.text()), schema.document.text);
        }
    }
}

#[test]
fn reviewer_envelopes_hold_no_hidden_context() {
    let s = Server::start();
    for (_, log) in fixtures::all() {
        let id = s.ingest(&log.to_jsonl());
        let teacher = s.get(&format!("/v1/sessions/{id}/schema?role=teacher"));
        let reviewer = s.get(&format!("/v1/sessions/{id}/schema?role=reviewer")).text();
        let document = parse_schema(&teacher.body).unwrap().document.text;
        for c in hidden_contexts(&log, &document, 1) {
            assert!(teacher.text().contains(&json_fragment(&c)));
            assert!(!reviewer.contains(&json_fragment(&c)), "{c:?}");
        }
    }
}

#[test]
fn raw_log_is_writer_only() {
    let s = Server::start();
    let log = fixtures::lavender().to_jsonl();
    let id = s.ingest(&log);
    for q in ["?role=teacher", "?role=reviewer", "?role=general", ""] {
        let r = s.get(&format!("/v1/sessions/{id}/log{q}"));
        assert_eq!(r.status, 403, "{q}");
        assert_eq!(r.content_type, "application/problem+json");
        assert!(!r.text().contains("\"seq\""));
    }
    assert_eq!(s.get(&format!("/v1/sessions/{id}/log?role=student")).status, 400);
    let r = s.get(&format!("/v1/sessions/{id}/log?role=writer"));
    assert_eq!(r.status, 200);
    assert_eq!(r.body, log.as_bytes());
    // Non-writers get 403 whether or not the session exists.
    let missing = "0".repeat(64);
    assert_eq!(s.get(&format!("/v1/sessions/{missing}/log?role=teacher")).status, 403);
    assert_eq!(s.get(&format!("/v1/sessions/{missing}/log?role=writer")).status, 404);
}

#[test]
fn not_found_and_bad_requests() {
    let s = Server::start();
    let id = s.ingest(&fixtures::bruce().to_jsonl());
    let missing = "0".repeat(64);
    for path in [
        format!("/v1/sessions/{missing}/schema?role=teacher"),
        format!("/v1/sessions/{missing}/export?role=teacher"),
        "/v1/sessions/deadbeef/schema?role=teacher".to_string(),
        "/v1/nothing".to_string(),
    ] {
        let r = s.get(&path);
        assert_eq!(r.status, 404, "{path}");
        assert_eq!(r.content_type, "application/problem+json");
    }
    for path in [
        format!("/v1/sessions/{id}/schema?role=student"),
        format!("/v1/sessions/{id}/schema"),
        format!("/v1/sessions/{id}/export?role="),
    ] {
        let r = s.get(&path);
        assert_eq!(r.status, 400, "{path}");
        assert!(r.json()["detail"].as_str().unwrap().contains("role"));
    }
}

#[test]
fn concurrent_readers_agree() {
    let s = Server::start();
    let id = s.ingest(&fixtures::matilda().to_jsonl());
    let bodies: Vec<Vec<u8>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..8)
            .map(|_| scope.spawn(|| s.get(&format!("/v1/sessions/{id}/schema?role=teacher")).body))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
    assert!(parse_schema(&bodies[0]).is_ok());
}
