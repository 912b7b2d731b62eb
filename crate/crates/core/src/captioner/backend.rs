//! Backends answer one rendered prompt (plus an optional image) with text.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine as _;
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::geometry::BBox;
use crate::seeding::{hex_digest, stable_hash};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("quota or rate limit exceeded")]
    Quota,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request rejected: {0}")]
    Rejected(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        !matches!(self, BackendError::Rejected(_))
    }
}

/// Image forwarded with a request. `bytes` may be empty when only a
/// reference is available; `crop` records the region of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePayload {
    pub id: String,
    pub bytes: Vec<u8>,
    pub crop: Option<BBox<f64>>,
}

impl ImagePayload {
    pub fn reference(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            bytes: Vec::new(),
            crop: None,
        }
    }

    /// Content digest used in cache keys; falls back to the id when no
    /// bytes are attached.
    pub fn digest(&self) -> String {
        let mut material = if self.bytes.is_empty() {
            format!("ref:{}", self.id).into_bytes()
        } else {
            self.bytes.clone()
        };
        if let Some(c) = &self.crop {
            material.extend(format!("|crop:{},{},{},{}", c.x_min, c.y_min, c.x_max, c.y_max).bytes());
        }
        hex_digest(&material)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub template: String,
    pub prompt: String,
    pub image: Option<ImagePayload>,
}

pub trait Backend: Send + Sync {
    /// Stable identifier, part of every cache key.
    fn id(&self) -> &str;
    fn send(&self, request: &LlmRequest) -> Result<String, BackendError>;
}

pub const COLOR_LEXICON: [&str; 14] = [
    "red", "orange", "yellow", "green", "blue", "purple", "pink", "brown", "black", "white", "gray", "silver", "beige", "cyan",
];

#[derive(Debug, Default, Deserialize)]
pub struct MockFixtures {
    #[serde(default)]
    pub captions: BTreeMap<String, String>,
    #[serde(default)]
    pub colors: BTreeMap<String, (String, String)>,
    /// Responses handed out in order per template before falling back.
    #[serde(default)]
    pub scripted: BTreeMap<String, Vec<String>>,
}

/// Offline backend. Fixture entries win; everything else is derived from a
/// hash of the request so repeated runs agree byte for byte.
pub struct MockBackend {
    captions: BTreeMap<String, String>,
    colors: BTreeMap<String, (String, String)>,
    scripted: Mutex<BTreeMap<String, VecDeque<String>>>,
    fail_remaining: AtomicUsize,
    always_fail: bool,
    calls: AtomicUsize,
    /// One in `disagree_every` images gets two different colors.
    disagree_every: u64,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new(MockFixtures::default())
    }
}

impl MockBackend {
    pub fn new(fixtures: MockFixtures) -> Self {
        Self {
            captions: fixtures.captions,
            colors: fixtures.colors,
            scripted: Mutex::new(fixtures.scripted.into_iter().map(|(k, v)| (k, v.into())).collect()),
            fail_remaining: AtomicUsize::new(0),
            always_fail: false,
            calls: AtomicUsize::new(0),
            disagree_every: 10,
        }
    }

    pub fn from_fixture_file(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let fixtures: MockFixtures = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::new(fixtures))
    }

    /// Fails the next `n` calls with a timeout.
    pub fn failing_first(self, n: usize) -> Self {
        self.fail_remaining.store(n, Ordering::SeqCst);
        self
    }

    pub fn unreachable() -> Self {
        Self {
            always_fail: true,
            ..Self::default()
        }
    }

    pub fn with_disagreement_rate(mut self, every: u64) -> Self {
        self.disagree_every = every.max(1);
        self
    }

    pub fn script(&self, template: &str, responses: impl IntoIterator<Item = String>) {
        self.scripted.lock().expect("mock lock").entry(template.to_string()).or_default().extend(responses);
    }

    /// Number of `send` calls received, failures included.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn caption_for(&self, id: &str) -> String {
        if let Some(c) = self.captions.get(id) {
            return c.clone();
        }
        const VIEWS: [&str; 3] = ["a high-resolution satellite image", "an aerial image", "an overhead satellite view"];
        const SCENES: [&str; 4] = ["an industrial area", "a harbor", "a suburban neighborhood", "farmland crossed by roads"];
        let h = stable_hash(&["caption", id]);
        format!(
            "This is {} of {}. Several objects are visible near the center. The layout suggests regular human activity.",
            VIEWS[(h % 3) as usize],
            SCENES[((h / 3) % 4) as usize]
        )
    }

    fn color_for(&self, id: &str, second: bool) -> String {
        if let Some((a, b)) = self.colors.get(id) {
            return if second { b.clone() } else { a.clone() };
        }
        let h = stable_hash(&["color", id]);
        let n = COLOR_LEXICON.len() as u64;
        let base = (h % n) as usize;
        let disagree = (h / n) % self.disagree_every == 0;
        if second {
            let idx = if disagree { (base + 1) % COLOR_LEXICON.len() } else { base };
            COLOR_LEXICON[idx].to_string()
        } else {
            let c = COLOR_LEXICON[base];
            format!("{}{}.", c[..1].to_uppercase(), &c[1..])
        }
    }

    fn dialogue_for(prompt: &str, reasoning: bool) -> String {
        let objects = prompt.lines().filter(|l| l.starts_with("- ")).count();
        let h = stable_hash(&["dialogue", prompt]);
        if reasoning {
            format!(
                "USER: What is the likely purpose of this area?\nASSISTANT: With {objects} annotated objects arranged along the main axis, the area most likely serves transport or storage.\nUSER: What supports that reading?\nASSISTANT: The objects are grouped closely, which is typical of facilities that are visited often (case {}).\n",
                h % 97
            )
        } else {
            format!(
                "USER: What does this image show?\nASSISTANT: It shows a remote sensing scene with {objects} annotated objects.\nUSER: Where are most objects located?\nASSISTANT: Most objects are located near the center of the image.\nUSER: Is the scene busy?\nASSISTANT: Moderately; the objects are spread over several regions (case {}).\n",
                h % 97
            )
        }
    }
}

impl Backend for MockBackend {
    fn id(&self) -> &str {
        "mock"
    }

    fn send(&self, request: &LlmRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self.always_fail {
            return Err(BackendError::Transport("mock backend is unreachable".into()));
        }
        if self
            .fail_remaining
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok()
        {
            return Err(BackendError::Timeout);
        }
        if let Some(r) = self.scripted.lock().expect("mock lock").get_mut(&request.template).and_then(VecDeque::pop_front) {
            return Ok(r);
        }
        let image_id = request.image.as_ref().map(|i| i.id.as_str()).unwrap_or("");
        Ok(match request.template.as_str() {
            "caption" => self.caption_for(image_id),
            "color_a" => self.color_for(image_id, false),
            "color_b" => self.color_for(image_id, true),
            "reasoning" => Self::dialogue_for(&request.prompt, true),
            "judge_color" => "yes".to_string(),
            _ => Self::dialogue_for(&request.prompt, false),
        })
    }
}

/// Settings for an OpenAI-compatible chat completions endpoint.
#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    pub timeout: Duration,
}

impl HttpBackendConfig {
    /// Reads `HNSTKIT_LLM_ENDPOINT`, `HNSTKIT_LLM_MODEL` and `HNSTKIT_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, String> {
        let get = |k: &str| std::env::var(k).map_err(|_| format!("environment variable {k} is not set"));
        Ok(Self {
            endpoint: get("HNSTKIT_LLM_ENDPOINT")?,
            model: get("HNSTKIT_LLM_MODEL")?,
            api_key: get("HNSTKIT_LLM_API_KEY")?,
            timeout: Duration::from_secs(60),
        })
    }
}

pub struct HttpBackend {
    id: String,
    config: HttpBackendConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            id: format!("http:{}:{}", config.endpoint, config.model),
            config,
            agent,
        }
    }

    fn body(&self, request: &LlmRequest) -> serde_json::Value {
        let mut content = vec![json!({"type": "text", "text": request.prompt})];
        if let Some(img) = request.image.as_ref().filter(|i| !i.bytes.is_empty()) {
            let b64 = base64::engine::general_purpose::STANDARD.encode(&img.bytes);
            content.push(json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}}));
        }
        json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": content}],
        })
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn send(&self, request: &LlmRequest) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(self.body(request));
        let mut resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(BackendError::Timeout),
            Err(e) => return Err(BackendError::Transport(e.to_string())),
        };
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            429 => return Err(BackendError::Quota),
            500..=599 => return Err(BackendError::Transport(format!("HTTP {status}"))),
            _ => {
                let text = resp.body_mut().read_to_string().unwrap_or_default();
                return Err(BackendError::Rejected(format!("HTTP {status}: {text}")));
            }
        }
        let value: serde_json::Value = resp.body_mut().read_json().map_err(|e| BackendError::Transport(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Rejected("response has no message content".into()))
    }
}
