//! Shared LLM client: disk cache, bounded concurrency, sliding-window rate
//! limit and retry with exponential backoff around a [`Backend`].

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backend::{Backend, BackendError, ImagePayload, LlmRequest};
use super::template::{PromptTemplate, TemplateError, TemplateSet};
use crate::io::write_atomic;
use crate::seeding::hex_digest;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmTranscript {
    pub request_id: String,
    pub template: String,
    pub prompt: String,
    #[serde(default)]
    pub image: Option<String>,
    pub response: String,
    /// Milliseconds since the Unix epoch; 0 under a logical clock.
    pub timestamp: u64,
    pub cached: bool,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("backend failed after {attempts} attempt(s): {last}")]
    Transport { attempts: u32, last: BackendError },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("backend returned an empty response for {0}")]
    EmptyResponse(String),
    #[error("cache i/o: {0}")]
    Cache(String),
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// At most `requests` request starts within any window of `interval`.
#[derive(Debug, Clone, Copy)]
pub struct RateLimit {
    pub requests: usize,
    pub interval: Duration,
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub max_in_flight: usize,
    pub rate: Option<RateLimit>,
    pub retry: RetryPolicy,
    pub cache_dir: Option<PathBuf>,
    /// Record timestamp 0 instead of wall-clock time.
    pub logical_clock: bool,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            max_in_flight: 4,
            rate: None,
            retry: RetryPolicy::default(),
            cache_dir: None,
            logical_clock: false,
        }
    }
}

#[derive(Debug, Default)]
pub struct ClientCounters {
    /// Calls that reached the backend, retries included.
    pub requests: AtomicU64,
    pub cache_hits: AtomicU64,
    pub failures: AtomicU64,
    pub max_in_flight: AtomicUsize,
    starts: Mutex<Vec<Instant>>,
}

impl ClientCounters {
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    /// Start instants of every backend call, in order.
    pub fn request_starts(&self) -> Vec<Instant> {
        self.starts.lock().expect("counter lock").clone()
    }
}

struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn acquire(&self, counters: &ClientCounters) {
        let mut n = self.in_flight.lock().expect("gate lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("gate lock");
        }
        *n += 1;
        counters.max_in_flight.fetch_max(*n, Ordering::SeqCst);
    }

    fn release(&self) {
        *self.in_flight.lock().expect("gate lock") -= 1;
        self.freed.notify_one();
    }
}

struct Window {
    limit: RateLimit,
    starts: Mutex<VecDeque<Instant>>,
}

impl Window {
    fn acquire(&self) {
        loop {
            let mut q = self.starts.lock().expect("rate lock");
            let now = Instant::now();
            while q.front().is_some_and(|t| now.duration_since(*t) >= self.limit.interval) {
                q.pop_front();
            }
            if q.len() < self.limit.requests {
                q.push_back(now);
                return;
            }
            let wait = self.limit.interval - now.duration_since(*q.front().expect("non-empty"));
            drop(q);
            std::thread::sleep(wait);
        }
    }
}

pub struct LlmClient {
    backend: Arc<dyn Backend>,
    templates: TemplateSet,
    config: ClientConfig,
    gate: Gate,
    window: Option<Window>,
    cache: Mutex<BTreeMap<String, LlmTranscript>>,
    transcripts: Mutex<BTreeMap<String, LlmTranscript>>,
    pub counters: ClientCounters,
}

impl LlmClient {
    pub fn new(backend: Arc<dyn Backend>, templates: TemplateSet, config: ClientConfig) -> Self {
        Self {
            backend,
            templates,
            gate: Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                limit: config.max_in_flight.max(1),
            },
            window: config.rate.map(|limit| Window {
                limit,
                starts: Mutex::new(VecDeque::new()),
            }),
            config,
            cache: Mutex::new(BTreeMap::new()),
            transcripts: Mutex::new(BTreeMap::new()),
            counters: ClientCounters::default(),
        }
    }

    /// Offline client over the mock backend with a logical clock and no
    /// backoff delay.
    pub fn mock(backend: Arc<dyn Backend>) -> Self {
        Self::new(
            backend,
            TemplateSet::builtin(),
            ClientConfig {
                logical_clock: true,
                retry: RetryPolicy {
                    base_delay: Duration::ZERO,
                    ..RetryPolicy::default()
                },
                ..ClientConfig::default()
            },
        )
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn cache_key(&self, template: &str, prompt: &str, image: Option<&ImagePayload>) -> String {
        let digest = image.map(ImagePayload::digest).unwrap_or_default();
        let material = [self.backend.id(), template, prompt, &digest].join("\u{0}");
        hex_digest(material.as_bytes())
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.config.cache_dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn cache_lookup(&self, key: &str) -> Option<LlmTranscript> {
        if let Some(t) = self.cache.lock().expect("cache lock").get(key) {
            return Some(t.clone());
        }
        let path = self.cache_path(key)?;
        let text = fs::read_to_string(path).ok()?;
        let t: LlmTranscript = serde_json::from_str(&text).ok()?;
        self.cache.lock().expect("cache lock").insert(key.to_string(), t.clone());
        Some(t)
    }

    fn cache_store(&self, key: &str, t: &LlmTranscript) -> Result<(), ClientError> {
        self.cache.lock().expect("cache lock").insert(key.to_string(), t.clone());
        if let Some(path) = self.cache_path(key) {
            let bytes = serde_json::to_vec_pretty(t).map_err(|e| ClientError::Cache(e.to_string()))?;
            write_atomic(&path, &bytes).map_err(|e| ClientError::Cache(e.to_string()))?;
        }
        Ok(())
    }

    fn now_ms(&self) -> u64 {
        if self.config.logical_clock {
            return 0;
        }
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
    }

    fn send_with_retry(&self, request: &LlmRequest) -> Result<String, ClientError> {
        self.gate.acquire(&self.counters);
        let mut attempt = 0;
        let result = loop {
            attempt += 1;
            if let Some(w) = &self.window {
                w.acquire();
            }
            self.counters.requests.fetch_add(1, Ordering::SeqCst);
            self.counters.starts.lock().expect("counter lock").push(Instant::now());
            match self.backend.send(request) {
                Ok(text) => break Ok(text),
                Err(e) => {
                    self.counters.failures.fetch_add(1, Ordering::SeqCst);
                    if !e.is_retryable() || attempt >= self.config.retry.max_attempts {
                        break Err(ClientError::Transport { attempts: attempt, last: e });
                    }
                    log::debug!("{} attempt {attempt} failed: {e}", request.template);
                    std::thread::sleep(self.config.retry.delay_before(attempt));
                }
            }
        };
        self.gate.release();
        result
    }

    /// Renders `template`, answers from cache when possible and otherwise
    /// calls the backend. Every completed call is kept as a transcript.
    pub fn call(
        &self,
        template: &PromptTemplate,
        bindings: &BTreeMap<&str, String>,
        image: Option<&ImagePayload>,
    ) -> Result<LlmTranscript, ClientError> {
        let prompt = template.render(bindings)?;
        self.call_rendered(&template.name, prompt, image)
    }

    pub fn call_named(
        &self,
        template: &str,
        bindings: &BTreeMap<&str, String>,
        image: Option<&ImagePayload>,
    ) -> Result<LlmTranscript, ClientError> {
        let t = self.templates.get(template)?.clone();
        self.call(&t, bindings, image)
    }

    fn call_rendered(&self, template: &str, prompt: String, image: Option<&ImagePayload>) -> Result<LlmTranscript, ClientError> {
        let key = self.cache_key(template, &prompt, image);
        if let Some(mut t) = self.cache_lookup(&key) {
            self.counters.cache_hits.fetch_add(1, Ordering::SeqCst);
            t.cached = true;
            self.transcripts.lock().expect("transcript lock").entry(key).or_insert_with(|| t.clone());
            return Ok(t);
        }
        let request = LlmRequest {
            template: template.to_string(),
            prompt,
            image: image.cloned(),
        };
        let response = self.send_with_retry(&request)?;
        if response.trim().is_empty() {
            return Err(ClientError::EmptyResponse(template.to_string()));
        }
        let t = LlmTranscript {
            request_id: key.clone(),
            template: template.to_string(),
            prompt: request.prompt,
            image: image.map(|i| i.id.clone()),
            response,
            timestamp: self.now_ms(),
            cached: false,
        };
        self.cache_store(&key, &t)?;
        self.transcripts.lock().expect("transcript lock").insert(key, t.clone());
        Ok(t)
    }

    pub fn transcript(&self, request_id: &str) -> Option<LlmTranscript> {
        self.transcripts.lock().expect("transcript lock").get(request_id).cloned()
    }

    /// All transcripts seen so far, ordered by request id.
    pub fn transcripts(&self) -> Vec<LlmTranscript> {
        self.transcripts.lock().expect("transcript lock").values().cloned().collect()
    }

    pub fn write_transcript_log(&self, path: &Path) -> std::io::Result<()> {
        crate::io::write_jsonl(path, &self.transcripts())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::captioner::backend::MockBackend;

    fn bindings() -> BTreeMap<&'static str, String> {
        let mut b = BTreeMap::new();
        b.insert("category", "ship".to_string());
        b
    }

    #[test]
    fn retries_then_succeeds() {
        let backend = Arc::new(MockBackend::default().failing_first(2));
        let client = LlmClient::mock(backend.clone());
        let t = client.call_named("color_a", &bindings(), Some(&ImagePayload::reference("x"))).unwrap();
        assert!(!t.response.is_empty());
        assert_eq!(client.counters.requests(), 3);
        assert_eq!(backend.calls(), 3);
    }

    #[test]
    fn gives_up_with_attempt_count() {
        let client = LlmClient::mock(Arc::new(MockBackend::unreachable()));
        match client.call_named("color_a", &bindings(), None) {
            Err(ClientError::Transport { attempts, .. }) => assert_eq!(attempts, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_attempts: 10,
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(500),
        };
        let d: Vec<u128> = (1..6).map(|a| p.delay_before(a).as_millis()).collect();
        assert_eq!(d, [100, 200, 400, 500, 500]);
    }

    #[test]
    fn disk_cache_survives_a_new_client() {
        let dir = tempfile::tempdir().unwrap();
        let config = ClientConfig {
            cache_dir: Some(dir.path().to_path_buf()),
            logical_clock: true,
            ..ClientConfig::default()
        };
        let first = LlmClient::new(Arc::new(MockBackend::default()), TemplateSet::builtin(), config.clone());
        let a = first.call_named("caption", &BTreeMap::from([("modality", "optical".into()), ("resolution", "0.5 m".into())]), Some(&ImagePayload::reference("i"))).unwrap();
        let backend = Arc::new(MockBackend::default());
        let second = LlmClient::new(backend.clone(), TemplateSet::builtin(), config);
        let b = second.call_named("caption", &BTreeMap::from([("modality", "optical".into()), ("resolution", "0.5 m".into())]), Some(&ImagePayload::reference("i"))).unwrap();
        assert_eq!(a.response, b.response);
        assert!(b.cached);
        assert_eq!(backend.calls(), 0);
    }

    #[test]
    fn unbound_placeholder_is_an_error() {
        let client = LlmClient::mock(Arc::new(MockBackend::default()));
        assert!(matches!(client.call_named("color_a", &BTreeMap::new(), None), Err(ClientError::Template(_))));
        assert!(matches!(client.call_named("nope", &BTreeMap::new(), None), Err(ClientError::Template(_))));
    }
}
