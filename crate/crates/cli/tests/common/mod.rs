#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use discoctx::context::VariantDataset;
use discoctx::treebank::{serialize_tree, Treebank};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_discoctx"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes `<dir>/<split>/<doc>.dep` for every tree.
pub fn write_treebank(dir: &Path, tb: &Treebank) -> PathBuf {
    for (split, corpus) in &tb.splits {
        let d = dir.join(split.as_str());
        std::fs::create_dir_all(&d).unwrap();
        for tree in &corpus.trees {
            std::fs::write(d.join(format!("{}.dep", tree.doc_id)), serialize_tree(tree)).unwrap();
        }
    }
    dir.to_path_buf()
}

/// Scripted chat-completion server. The responder sees the 0-based request
/// number and the prompt, and returns (status, body).
pub struct MockServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
}

pub type Responder = dyn Fn(usize, &str) -> (u16, String) + Send + Sync;

impl MockServer {
    pub fn start(respond: impl Fn(usize, &str) -> (u16, String) + Send + Sync + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let addr = server.server_addr().to_ip().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let (s, n) = (server.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            while let Ok(mut req) = s.recv() {
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                let prompt = serde_json::from_str::<serde_json::Value>(&body)
                    .ok()
                    .and_then(|v| v["messages"][0]["content"].as_str().map(str::to_string))
                    .unwrap_or_default();
                let k = n.fetch_add(1, Ordering::SeqCst);
                let (status, text) = respond(k, &prompt);
                let resp = tiny_http::Response::from_string(text).with_status_code(status);
                let _ = req.respond(resp);
            }
        });
        MockServer {
            url: format!("http://{addr}/v1"),
            requests,
            server,
            handle: Some(handle),
        }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn chat_reply(content: &str) -> String {
    serde_json::json!({
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

/// Target line of a prompt: its last line.
pub fn target_line(prompt: &str) -> &str {
    prompt.rsplit('\n').next().unwrap_or("")
}

/// Gold label keyed by the target line the prompt template produces for
/// each instance. Panics if two instances render identically with
/// different labels.
pub fn gold_by_target(ds: &VariantDataset) -> HashMap<String, String> {
    let mut map = HashMap::new();
    for i in &ds.instances {
        let line = format!(
            "Passage 1: {}, Passage 2: {}, connective: {} | [MASK]",
            i.model_input(),
            i.arg2_text,
            i.connective
        );
        if let Some(prev) = map.insert(line.clone(), i.gold_label.clone()) {
            assert_eq!(prev, i.gold_label, "ambiguous target {line}");
        }
    }
    map
}

/// Answers every prompt with its gold label, phrased loosely.
pub fn gold_echo(map: HashMap<String, String>) -> impl Fn(usize, &str) -> (u16, String) + Send + Sync {
    move |_, prompt| match map.get(target_line(prompt)) {
        Some(label) => (200, chat_reply(&format!("The relation is {label}."))),
        None => (200, chat_reply("unknown")),
    }
}
