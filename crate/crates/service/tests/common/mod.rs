#![allow(dead_code)]

use std::sync::Arc;

use draftmarks_core::config::EngineConfig;
use draftmarks_core::store::SessionStore;
use tempfile::TempDir;
use tokio::runtime::Runtime;

pub struct Reply {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

/// The service on an ephemeral local port, backed by a fresh store.
pub struct Server {
    pub base: String,
    pub store_dir: TempDir,
    rt: Runtime,
    client: reqwest::Client,
}

impl Server {
    pub fn start() -> Server {
        Server::start_with(EngineConfig::default())
    }

    pub fn start_with(config: EngineConfig) -> Server {
        let store_dir = tempfile::tempdir().unwrap();
        let store = Arc::new(SessionStore::open(store_dir.path(), config).unwrap());
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        let listener = rt
            .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
            .unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        rt.spawn(draftmarks_service::api::serve(listener, store));
        Server {
            base,
            store_dir,
            rt,
            client: reqwest::Client::new(),
        }
    }

    fn finish(&self, req: reqwest::RequestBuilder) -> Reply {
        self.rt.block_on(async {
            let resp = req.send().await.unwrap();
            let status = resp.status().as_u16();
            let content_type = resp
                .headers()
                .get("content-type")
                .map(|v| v.to_str().unwrap().to_string())
                .unwrap_or_default();
            let body = resp.bytes().await.unwrap().to_vec();
            Reply {
                status,
                content_type,
                body,
            }
        })
    }

    pub fn get(&self, path: &str) -> Reply {
        self.finish(self.client.get(format!("{}{path}", self.base)))
    }

    pub fn post(&self, path: &str, body: impl Into<Vec<u8>>) -> Reply {
        self.finish(self.client.post(format!("{}{path}", self.base)).body(body.into()))
    }

    /// Ingests and returns the id.
    pub fn ingest(&self, log: &str) -> String {
        let r = self.post("/v1/sessions", log.as_bytes().to_vec());
        assert!(r.status == 201 || r.status == 200, "ingest: {} {}", r.status, r.text());
        r.json()["id"].as_str().unwrap().to_string()
    }
}
