//! Chat backends: an HTTP chat-completion client and two offline mocks.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use t4d_core::convert::T4DInstance;
use t4d_core::prompts::{answer_sentence, PromptSpec, PREAMBLE};

use crate::cache::{cache_key, prompt_hash, ResponseCache};
use crate::error::{HarnessError, Result};

fn default_temperature() -> f64 {
    0.0
}
fn default_max_tokens() -> u32 {
    800
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub name: String,
    pub endpoint_url: String,
    pub model_id: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub request_timeout: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First retry delay in milliseconds; doubles on every retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Send the opening preamble paragraph as a system message.
    #[serde(default)]
    pub system_preamble: bool,
}

impl BackendConfig {
    pub fn new(name: &str, endpoint_url: &str, model_id: &str) -> Self {
        Self {
            name: name.into(),
            endpoint_url: endpoint_url.into(),
            model_id: model_id.into(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            api_key_env: default_api_key_env(),
            request_timeout: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            system_preamble: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(HarnessError::Config("backend name is empty".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(HarnessError::Config(format!("{}: temperature must be >= 0", self.name)));
        }
        if self.max_tokens < 1 {
            return Err(HarnessError::Config(format!("{}: max_tokens must be >= 1", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelResponse {
    pub raw_text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub latency_ms: u64,
    pub from_cache: bool,
}

impl ModelResponse {
    fn text(raw_text: String) -> Self {
        ModelResponse { raw_text, ..Default::default() }
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    /// Cache key for a prompt; `None` if responses must not be cached.
    fn cache_key(&self, prompt: &str) -> Option<String>;

    fn respond(&self, prompt: &PromptSpec, inst: &T4DInstance) -> Result<ModelResponse>;
}

/// Outcome of one POST: status and body, or a transport failure message.
pub type TransportResult = std::result::Result<(u16, String), String>;

pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, headers: &[(&str, String)], body: &Value) -> TransportResult;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, headers: &[(&str, String)], body: &Value) -> TransportResult {
        let mut req = self.agent.post(url);
        for (k, v) in headers {
            req = req.header(*k, v.as_str());
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

type ReplyFn = dyn Fn(usize, &Value) -> TransportResult + Send + Sync;

/// Scripted transport for tests: answers from a closure and counts calls.
pub struct MockTransport {
    calls: AtomicUsize,
    bodies: Mutex<Vec<Value>>,
    reply: Box<ReplyFn>,
}

impl MockTransport {
    pub fn new(reply: impl Fn(usize, &Value) -> TransportResult + Send + Sync + 'static) -> Self {
        Self { calls: AtomicUsize::new(0), bodies: Mutex::new(Vec::new()), reply: Box::new(reply) }
    }

    /// Always answers 200 with `content` as the first choice.
    pub fn answering(content: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        Self::new(move |_, body| {
            let prompt = body["messages"].as_array().and_then(|m| m.last()).and_then(|m| m["content"].as_str());
            let text = content(prompt.unwrap_or_default());
            Ok((200, json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()))
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn bodies(&self) -> Vec<Value> {
        self.bodies.lock().unwrap().clone()
    }
}

impl Transport for MockTransport {
    fn post_json(&self, _url: &str, _headers: &[(&str, String)], body: &Value) -> TransportResult {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        self.bodies.lock().unwrap().push(body.clone());
        (self.reply)(n, body)
    }
}

pub struct HttpBackend {
    cfg: BackendConfig,
    api_key: String,
    transport: Arc<dyn Transport>,
}

impl HttpBackend {
    /// Reads the credential from the configured environment variable.
    pub fn from_env(cfg: BackendConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        let key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| HarnessError::Auth(format!("{}: ${} is not set", cfg.name, cfg.api_key_env)))?;
        Self::with_api_key(cfg, key, transport)
    }

    pub fn with_api_key(cfg: BackendConfig, api_key: String, transport: Arc<dyn Transport>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, api_key, transport })
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        let messages = match prompt.strip_prefix(PREAMBLE).and_then(|r| r.strip_prefix("\n\n")) {
            Some(rest) if self.cfg.system_preamble => json!([
                {"role": "system", "content": PREAMBLE},
                {"role": "user", "content": rest},
            ]),
            _ => json!([{"role": "user", "content": prompt}]),
        };
        json!({
            "model": self.cfg.model_id,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        })
    }

    fn parse_body(&self, body: &str) -> Result<ModelResponse> {
        let v: Value = serde_json::from_str(body)
            .map_err(|e| HarnessError::Backend(format!("{}: bad response JSON: {e}", self.cfg.name)))?;
        let message = &v["choices"][0]["message"];
        if message.is_null() {
            return Err(HarnessError::Backend(format!("{}: response has no choices", self.cfg.name)));
        }
        Ok(ModelResponse {
            raw_text: message["content"].as_str().unwrap_or_default().to_string(),
            prompt_tokens: v["usage"]["prompt_tokens"].as_u64(),
            completion_tokens: v["usage"]["completion_tokens"].as_u64(),
            ..Default::default()
        })
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        &self.cfg.name
    }

    fn cache_key(&self, prompt: &str) -> Option<String> {
        let c = &self.cfg;
        Some(cache_key(&c.model_id, c.temperature, c.max_tokens, c.system_preamble, prompt))
    }

    fn respond(&self, prompt: &PromptSpec, _inst: &T4DInstance) -> Result<ModelResponse> {
        let body = self.request_body(&prompt.text);
        let headers = [("Authorization", format!("Bearer {}", self.api_key))];
        let mut last_error = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                let delay = self.cfg.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::debug!("{}: retry {attempt} in {delay} ms ({last_error})", self.cfg.name);
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.transport.post_json(&self.cfg.endpoint_url, &headers, &body) {
                Ok((200..=299, text)) => return self.parse_body(&text),
                Ok((status @ (401 | 403), _)) => {
                    return Err(HarnessError::Auth(format!("{}: HTTP {status}", self.cfg.name)))
                }
                Ok((status, text)) if status == 429 || status >= 500 => {
                    last_error = format!("HTTP {status}: {}", text.chars().take(200).collect::<String>());
                }
                Ok((status, text)) => {
                    return Err(HarnessError::Backend(format!(
                        "{}: HTTP {status}: {}",
                        self.cfg.name,
                        text.chars().take(200).collect::<String>()
                    )))
                }
                Err(e) => last_error = e,
            }
        }
        Err(HarnessError::Backend(format!(
            "{}: gave up after {} retries: {last_error}",
            self.cfg.name, self.cfg.max_retries
        )))
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

pub fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\t', "\\t").replace('\r', "\\r")
}

/// Replies looked up by prompt hash. Script lines are
/// `<sha256 of prompt>\t<reply with \n, \t, \\ escapes>`; `#` starts a comment.
pub struct ScriptedBackend {
    name: String,
    replies: HashMap<String, String>,
}

impl ScriptedBackend {
    pub fn new(name: impl Into<String>, replies: HashMap<String, String>) -> Self {
        Self { name: name.into(), replies }
    }

    pub fn parse(name: impl Into<String>, script: &str) -> Result<Self> {
        let mut replies = HashMap::new();
        for (n, line) in script.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (hash, text) = line
                .split_once('\t')
                .ok_or_else(|| HarnessError::Config(format!("script line {}: missing tab", n + 1)))?;
            replies.insert(hash.trim().to_ascii_lowercase(), unescape(text));
        }
        Ok(Self::new(name, replies))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(format!("mock:{}", path.display()), &text)
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn cache_key(&self, prompt: &str) -> Option<String> {
        Some(cache_key(&self.name, 0.0, 0, false, prompt))
    }

    fn respond(&self, prompt: &PromptSpec, _inst: &T4DInstance) -> Result<ModelResponse> {
        let hash = prompt_hash(&prompt.text);
        self.replies
            .get(&hash)
            .cloned()
            .map(ModelResponse::text)
            .ok_or_else(|| HarnessError::Backend(format!("{}: no scripted reply for prompt {hash}", self.name)))
    }
}

/// Answers every prompt with the instance's gold label.
pub struct GoldEchoBackend;

impl Backend for GoldEchoBackend {
    fn name(&self) -> &str {
        "mock:gold"
    }

    fn cache_key(&self, _prompt: &str) -> Option<String> {
        None
    }

    fn respond(&self, _prompt: &PromptSpec, inst: &T4DInstance) -> Result<ModelResponse> {
        Ok(ModelResponse::text(answer_sentence(&inst.gold)))
    }
}

/// Consults the cache before the wrapped backend and stores what it returns.
pub struct CachedBackend {
    inner: Arc<dyn Backend>,
    cache: ResponseCache,
}

impl CachedBackend {
    pub fn new(inner: Arc<dyn Backend>, cache: ResponseCache) -> Self {
        Self { inner, cache }
    }
}

impl Backend for CachedBackend {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn cache_key(&self, prompt: &str) -> Option<String> {
        self.inner.cache_key(prompt)
    }

    fn respond(&self, prompt: &PromptSpec, inst: &T4DInstance) -> Result<ModelResponse> {
        let Some(key) = self.inner.cache_key(&prompt.text) else {
            return self.inner.respond(prompt, inst);
        };
        if let Some(text) = self.cache.get(&key)? {
            return Ok(ModelResponse { raw_text: text, from_cache: true, ..Default::default() });
        }
        let started = Instant::now();
        let mut resp = self.inner.respond(prompt, inst)?;
        resp.latency_ms = started.elapsed().as_millis() as u64;
        self.cache.put(&key, &resp.raw_text)?;
        Ok(resp)
    }
}

/// Resolves `mock:gold`, `mock:<script path>` or the name of a configured
/// HTTP backend.
pub fn open_backend(spec: &str, configs: &[BackendConfig], cache: Option<&ResponseCache>) -> Result<Arc<dyn Backend>> {
    let backend: Arc<dyn Backend> = match spec.strip_prefix("mock:") {
        Some("gold") => Arc::new(GoldEchoBackend),
        Some(path) => Arc::new(ScriptedBackend::from_file(Path::new(path))?),
        None => {
            let cfg = configs
                .iter()
                .find(|c| c.name == spec)
                .cloned()
                .ok_or_else(|| HarnessError::Config(format!("no backend named {spec:?} in the config")))?;
            let transport = Arc::new(UreqTransport::new(Duration::from_secs(cfg.request_timeout)));
            Arc::new(HttpBackend::from_env(cfg, transport)?)
        }
    };
    Ok(match cache {
        Some(cache) => Arc::new(CachedBackend::new(backend, cache.clone())),
        None => backend,
    })
}
