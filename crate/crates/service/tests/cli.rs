use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use draftmarks_core::controller::Role;
use draftmarks_core::schema_io::{parse_schema, strip_tags};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_draftmarks"));
    c.env_remove("DRAFTMARKS_STORE")
        .env_remove("DRAFTMARKS_CONFIG")
        .env_remove("DRAFTMARKS_LISTEN");
    c
}

fn run(store: &Path, args: &[&str]) -> Output {
    bin().arg("--store").arg(store).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_fixtures(dir: &Path) {
    let o = bin().arg("fixtures").arg("--out").arg(dir).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn ingest_schema_and_export() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store");
    write_fixtures(tmp.path());
    let log = tmp.path().join("bruce.jsonl");
    let o = run(&store, &["ingest", log.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let id = stdout(&o).trim().to_string();
    assert_eq!(id.len(), 64);
    assert!(id.bytes().all(|b| b.is_ascii_hexdigit()));
    let again = run(&store, &["ingest", log.to_str().unwrap()]);
    assert_eq!(stdout(&again).trim(), id);

    for role in Role::ALL {
        let out = tmp.path().join(format!("{role}.json"));
        let o = run(&store, &["schema", &id, "--role", role.as_str(), "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let schema = parse_schema(&std::fs::read(&out).unwrap()).unwrap();
        assert_eq!(schema.role, role);

        let html = tmp.path().join(format!("{role}.html"));
        let o = run(&store, &["export", &id, "--role", role.as_str(), "-o", html.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(strip_tags(&std::fs::read_to_string(&html).unwrap()), schema.document.text);
    }
    let o = run(&store, &["schema", &id, "--role", "reviewer"]);
    assert!(parse_schema(stdout(&o).trim_end().as_bytes()).is_ok());
}

#[test]
fn missing_session_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["schema", "deadbeef", "--role", "teacher"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("session not found"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &[][..],
        &["schema", "abc"][..],
        &["schema", "abc", "--role", "student"][..],
        &["frobnicate"][..],
    ] {
        let o = run(tmp.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn rejected_logs_and_bad_config_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.jsonl");
    std::fs::write(&bad, "{}\n").unwrap();
    let o = run(tmp.path(), &["ingest", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(tmp.path(), &["ingest", "/nonexistent/log.jsonl"]);
    assert_eq!(o.status.code(), Some(1));

    let config = tmp.path().join("engine.toml");
    std::fs::write(&config, "[thresholds]\ntonal_overlap = 3.0\n").unwrap();
    write_fixtures(tmp.path());
    let o = bin()
        .args(["--store", tmp.path().to_str().unwrap(), "ingest"])
        .arg(tmp.path().join("bruce.jsonl"))
        .env("DRAFTMARKS_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tonal_overlap"), "{}", stderr(&o));
}

#[test]
fn store_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixtures(tmp.path());
    let store = tmp.path().join("env-store");
    let o = bin()
        .arg("ingest")
        .arg(tmp.path().join("matilda.jsonl"))
        .env("DRAFTMARKS_STORE", &store)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let id = stdout(&o).trim().to_string();
    assert!(store.join("sessions").join(&id).join("log.jsonl").is_file());
}

struct Serving(Child);

impl Drop for Serving {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

#[test]
fn serve_answers_http() {
    let tmp = tempfile::tempdir().unwrap();
    let addr = format!("127.0.0.1:{}", free_port());
    let _server = Serving(
        bin()
            .args(["serve", "--store", tmp.path().to_str().unwrap()])
            .env("DRAFTMARKS_LISTEN", &addr)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let rt = tokio::runtime::Runtime::new().unwrap();
    let base = format!("http://{addr}");
    rt.block_on(async {
        let client = reqwest::Client::new();
        let start = Instant::now();
        loop {
            match client.get(format!("{base}/v1/healthz")).send().await {
                Ok(r) if r.status() == 200 => break,
                _ if start.elapsed() > Duration::from_secs(20) => panic!("server did not start"),
                _ => tokio::time::sleep(Duration::from_millis(50)).await,
            }
        }
        let log = draftmarks_core::fixtures::lavender().to_jsonl();
        let r = client.post(format!("{base}/v1/sessions")).body(log).send().await.unwrap();
        assert_eq!(r.status(), 201);
        let v: serde_json::Value = serde_json::from_slice(&r.bytes().await.unwrap()).unwrap();
        let id = v["id"].as_str().unwrap();
        let r = client
            .get(format!("{base}/v1/sessions/{id}/schema?role=general"))
            .send()
            .await
            .unwrap();
        assert_eq!(r.status(), 200);
        assert!(parse_schema(&r.bytes().await.unwrap()).is_ok());
        let r = client.get(format!("{base}/v1/sessions/{id}/log")).send().await.unwrap();
        assert_eq!(r.status(), 403);
    });
}
