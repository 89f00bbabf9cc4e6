//! Prompt-based inference against an OpenAI-style chat-completion endpoint.
//!
//! Each completed request is appended to a JSONL results log before the next
//! one is taken, so an interrupted run can be resumed: instances already in
//! the log are not requested again.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::{
    build_prompt, parse_llm_output, sample_icl_examples, Condition, InferenceError,
    PredictionSet, PromptSpec, UNPARSED,
};
use crate::context::VariantDataset;
use crate::treebank::InstanceId;

#[derive(Debug, Error)]
pub enum EndpointError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("authentication failed (HTTP {0})")]
    Auth(u16),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("environment variable {0} is not set")]
    MissingToken(String),
}

impl EndpointError {
    pub fn is_retryable(&self) -> bool {
        match self {
            EndpointError::Transport(_) | EndpointError::Protocol(_) => true,
            EndpointError::Status { status, .. } => *status == 429 || *status >= 500,
            EndpointError::Auth(_) | EndpointError::MissingToken(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// e.g. `https://api.openai.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Must be 0.
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    pub parallelism: usize,
    /// Environment variable holding the bearer token; no auth header if unset.
    pub token_env: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            model: "gpt-4-0613".to_string(),
            temperature: 0.0,
            timeout_secs: 60,
            max_retries: 5,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            parallelism: 4,
            token_env: Some("OPENAI_API_KEY".to_string()),
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.temperature != 0.0 {
            return Err(InferenceError::Config(format!(
                "temperature must be 0, got {}",
                self.temperature
            )));
        }
        if self.parallelism == 0 {
            return Err(InferenceError::Config("parallelism must be at least 1".into()));
        }
        if self.base_url.is_empty() || self.model.is_empty() {
            return Err(InferenceError::Config("base_url and model are required".into()));
        }
        Ok(())
    }

    /// `min(base · 2^(attempt−1), max)` for 1-based `attempt`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor).min(self.backoff_max_ms))
    }
}

/// Anything that turns a prompt into a completion.
pub trait ChatBackend: Sync {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError>;
}

pub struct HttpChatClient {
    agent: ureq::Agent,
    url: String,
    model: String,
    temperature: f64,
    token: Option<String>,
}

impl HttpChatClient {
    /// Reads the bearer token from the configured environment variable.
    pub fn new(config: &EndpointConfig) -> Result<Self, EndpointError> {
        let token = match &config.token_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| EndpointError::MissingToken(var.clone()))?,
            ),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(HttpChatClient {
            agent,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            model: config.model.clone(),
            temperature: config.temperature,
            token,
        })
    }
}

impl ChatBackend for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&self.url);
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(EndpointError::Auth(status)),
            _ => return Err(EndpointError::Status { status, body: text }),
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| EndpointError::Protocol(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| EndpointError::Protocol("no choices[0].message.content".into()))
    }
}

/// One line of the resumable results log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub instance_id: InstanceId,
    pub predicted_label: String,
    pub raw_output: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointRun {
    pub predictions: PredictionSet,
    /// Requests issued in this invocation.
    pub requests: usize,
    /// Retries across all requests.
    pub retries: usize,
    /// Instances taken from an existing log.
    pub resumed: usize,
}

fn read_log(path: &Path) -> Result<BTreeMap<InstanceId, String>, InferenceError> {
    let mut done = BTreeMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(e.into()),
    };
    for line in BufReader::new(file).lines() {
        let line = line?;
        // A torn final line from an interrupted write is skipped.
        if let Ok(rec) = serde_json::from_str::<LogRecord>(&line) {
            done.insert(rec.instance_id, rec.predicted_label);
        }
    }
    Ok(done)
}

/// Opens the log for appending, terminating a torn last line first.
fn open_log(path: &Path) -> std::io::Result<File> {
    let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
    let len = file.metadata()?.len();
    if len > 0 {
        file.seek(SeekFrom::End(-1))?;
        let mut last = [0u8; 1];
        file.read_exact(&mut last)?;
        if last[0] != b'\n' {
            file.write_all(b"\n")?;
        }
    }
    Ok(file)
}

fn complete_with_retry(
    backend: &dyn ChatBackend,
    prompt: &str,
    config: &EndpointConfig,
    retries: &AtomicUsize,
) -> Result<String, EndpointError> {
    let mut attempt = 0;
    loop {
        match backend.complete(prompt) {
            Ok(text) => return Ok(text),
            Err(err) if err.is_retryable() && attempt < config.max_retries => {
                attempt += 1;
                retries.fetch_add(1, Ordering::Relaxed);
                let delay = config.backoff(attempt);
                log::warn!(
                    "retry {attempt}/{} after {} ms: {err}",
                    config.max_retries,
                    delay.as_millis()
                );
                std::thread::sleep(delay);
            }
            Err(err) => return Err(err),
        }
    }
}

/// Classifies every instance of `dataset` through `backend`.
///
/// ICL examples are drawn once per run from `train` with `seed`, excluding
/// any id of `dataset`. With `log_path`, completed instances are appended
/// there and skipped on the next call.
pub fn run_endpoint_inference(
    dataset: &VariantDataset,
    train: &VariantDataset,
    config: &EndpointConfig,
    seed: u64,
    backend: &dyn ChatBackend,
    log_path: Option<&Path>,
) -> Result<EndpointRun, InferenceError> {
    config.validate()?;
    let exclude: HashSet<InstanceId> = dataset.ids().cloned().collect();
    let examples = sample_icl_examples(train, seed, &exclude)?;
    let inventory = train.label_inventory.clone();

    let mut done = match log_path {
        Some(p) => read_log(p)?,
        None => BTreeMap::new(),
    };
    done.retain(|id, _| dataset.get(id).is_some());
    let resumed = done.len();
    let pending: Vec<_> = dataset
        .instances
        .iter()
        .filter(|i| !done.contains_key(&i.instance_id))
        .collect();

    let log = match log_path {
        Some(p) => Some(Mutex::new(open_log(p)?)),
        None => None,
    };
    let results = Mutex::new(done);
    let next = AtomicUsize::new(0);
    let retries = AtomicUsize::new(0);
    let requests = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let first_error: Mutex<Option<InferenceError>> = Mutex::new(None);

    let worker = || {
        while !failed.load(Ordering::SeqCst) {
            let k = next.fetch_add(1, Ordering::SeqCst);
            let Some(inst) = pending.get(k) else { break };
            let outcome = PromptSpec::new(inventory.clone(), examples.clone(), (*inst).clone())
                .and_then(|spec| {
                    requests.fetch_add(1, Ordering::Relaxed);
                    complete_with_retry(backend, &build_prompt(&spec), config, &retries).map_err(
                        |source| InferenceError::Endpoint {
                            completed: 0,
                            source,
                        },
                    )
                })
                .and_then(|raw| {
                    let label = parse_llm_output(&raw, &inventory).unwrap_or(UNPARSED).to_string();
                    if let Some(log) = &log {
                        let rec = LogRecord {
                            instance_id: inst.instance_id.clone(),
                            predicted_label: label.clone(),
                            raw_output: raw,
                        };
                        let mut line = serde_json::to_vec(&rec).expect("record serializes");
                        line.push(b'\n');
                        let mut f = log.lock().expect("log lock");
                        f.write_all(&line)?;
                        f.flush()?;
                    }
                    results
                        .lock()
                        .expect("results lock")
                        .insert(inst.instance_id.clone(), label);
                    Ok(())
                });
            if let Err(e) = outcome {
                failed.store(true, Ordering::SeqCst);
                first_error.lock().expect("error lock").get_or_insert(e);
                break;
            }
        }
    };
    std::thread::scope(|s| {
        for _ in 0..config.parallelism.min(pending.len().max(1)) {
            s.spawn(worker);
        }
    });

    let records = results.into_inner().expect("results lock");
    if let Some(err) = first_error.into_inner().expect("error lock") {
        return Err(match err {
            InferenceError::Endpoint { source, .. } => InferenceError::Endpoint {
                completed: records.len(),
                source,
            },
            other => other,
        });
    }
    let predictions = PredictionSet::new(
        Condition::new(dataset.scheme, config.model.clone()),
        seed,
        records,
    );
    Ok(EndpointRun {
        predictions,
        requests: requests.into_inner(),
        retries: retries.into_inner(),
        resumed,
    })
}
