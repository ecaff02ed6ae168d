//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::Server;
use draftmarks_core::config::Thresholds;
use draftmarks_core::controller::Role;
use draftmarks_core::fixtures;
use draftmarks_core::ingest::replay_session;
use draftmarks_core::schema_io::{parse_schema, strip_tags};
use draftmarks_core::trace::analyze;
use draftmarks_testkit::checks::{self, check_round_trip, check_tamper_rejected, fixture_schemas};
use draftmarks_testkit::script::trigger_cases;
use draftmarks_testkit::{random_log, random_schema, GenLimits, NaiveReplay};

const REPLAY_CASES: u64 = 1000;
const TRACE_CASES: u64 = 500;
const SCHEMA_CASES: u64 = 200;

fn within(elapsed: Duration, budget: Duration, what: &str) {
    assert!(elapsed < budget, "{what} took {elapsed:?}, budget {budget:?}");
}

fn triggers() -> String {
    let start = Instant::now();
    let cases = trigger_cases();
    for c in &cases {
        checks::check_trigger_case(c);
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1), "trigger suite");
    format!("{} scripted logs in {elapsed:.2?}", cases.len())
}

fn replay_oracle() -> String {
    let start = Instant::now();
    let limits = GenLimits::default();
    let mut events = 0;
    for i in 0..REPLAY_CASES {
        let log = random_log(0x5EED_0000 + i, limits);
        assert!(log.events.len() <= limits.max_events);
        let oracle = NaiveReplay::run(&log, limits.threshold).unwrap();
        assert!(oracle.node_count() <= limits.max_nodes);
        events += log.events.len();
        let outcome = panic::catch_unwind(|| checks::check_replay(&log));
        if let Err(e) = outcome {
            panic::resume_unwind(Box::new(format!("case {i}: {}", message(&e))));
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60), "replay oracle");
    format!("{REPLAY_CASES} logs, {events} events in {elapsed:.2?}")
}

fn sharing() -> String {
    let s = checks::check_sharing();
    format!(
        "{} live records, pool grew by {}, {} unique records across 101 versions",
        s.live_at_baseline, s.pool_growth, s.unique_records
    )
}

fn trace_properties() -> String {
    let th = Thresholds::default();
    let start = Instant::now();
    let mut chains = 0;
    for i in 0..TRACE_CASES {
        let h = replay_session(&random_log(0x7ACE_0000 + i, GenLimits::default())).unwrap();
        let t = analyze(&h, &th).unwrap();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
            checks::check_segments(&h, &t, &th);
            checks::check_chains(&h, &t, &th);
            checks::check_discards(&h, &t);
            checks::check_edits(&h, &t);
            checks::check_kinds(&h, &t, &th);
            checks::check_feedback(&h, &t, &th);
        }));
        if let Err(e) = outcome {
            panic::resume_unwind(Box::new(format!("case {i}: {}", message(&e))));
        }
        chains += t.chains.len();
    }
    format!(
        "{TRACE_CASES} histories, 6 properties each, {chains} chains, {:.2?}",
        start.elapsed()
    )
}

fn scenarios() -> String {
    checks::check_matilda();
    checks::check_lavender();
    checks::check_bruce();
    "matilda, lavender, bruce".to_string()
}

fn projection() -> String {
    for (_, log) in fixtures::all() {
        checks::check_projection(&log);
    }
    let probes = checks::check_hidden_contexts_on_fixtures();
    format!("3 fixtures, {probes} hidden contexts searched")
}

fn serialization() -> String {
    let fixed = fixture_schemas();
    for (name, s) in &fixed {
        check_round_trip(name, s);
        check_tamper_rejected(s);
    }
    for seed in 0..SCHEMA_CASES {
        let s = random_schema(seed);
        check_round_trip(&format!("seed {seed}"), &s);
        check_tamper_rejected(&s);
    }
    format!("{} fixture and {SCHEMA_CASES} fuzzed schemas", fixed.len())
}

fn service() -> String {
    let server = Server::start();
    let mut slowest = Duration::ZERO;
    for (name, log) in fixtures::all() {
        let body = log.to_jsonl();
        let start = Instant::now();
        let first = server.post("/v1/sessions", body.clone());
        assert_eq!(first.status, 201, "{name}: {}", first.text());
        let id = first.json()["id"].as_str().unwrap().to_string();
        for role in Role::ALL {
            let r = server.get(&format!("/v1/sessions/{id}/schema?role={role}"));
            assert_eq!(r.status, 200, "{name}/{role}: {}", r.text());
            let schema = parse_schema(&r.body).unwrap();
            assert_eq!(schema.role, role);
            let e = server.get(&format!("/v1/sessions/{id}/export?role={role}"));
            assert_eq!(e.status, 200, "{name}/{role} export");
            assert_eq!(strip_tags(&e.text()), schema.document.text);
        }
        let elapsed = start.elapsed();
        within(elapsed, Duration::from_secs(2), name);
        slowest = slowest.max(elapsed);

        let again = server.post("/v1/sessions", body.clone());
        assert_eq!(again.json()["id"], id.as_str(), "{name}: re-ingest changed the id");
        for role in ["teacher", "reviewer", "general"] {
            let r = server.get(&format!("/v1/sessions/{id}/log?role={role}"));
            assert_eq!(r.status, 403, "{name}: /log for {role}");
        }
        assert_eq!(server.get(&format!("/v1/sessions/{id}/log")).status, 403);
        let w = server.get(&format!("/v1/sessions/{id}/log?role=writer"));
        assert_eq!((w.status, w.body), (200, body.into_bytes()));
    }
    format!("3 fixtures x 4 roles, slowest fixture {slowest:.2?}")
}

fn message(e: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = e.downcast_ref::<String>() {
        s.clone()
    } else if let Some(s) = e.downcast_ref::<&str>() {
        s.to_string()
    } else {
        "panic".to_string()
    }
}

type Criterion = (&'static str, fn() -> String);

fn main() {
    let criteria: [Criterion; 8] = [
        ("versioning triggers", triggers),
        ("replay oracle equivalence", replay_oracle),
        ("structural sharing", sharing),
        ("trace properties", trace_properties),
        ("scenario fixtures", scenarios),
        ("controller projection", projection),
        ("serialization", serialization),
        ("service end-to-end", service),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        match panic::catch_unwind(f) {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}: {}", message(&e));
            }
        }
    }
    let _ = panic::take_hook();
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
