//! The one client for external LLM traffic.
//!
//! Requests go to an OpenAI-compatible `/chat/completions` endpoint. Every
//! exchange is recorded in a content-addressed cache keyed by the hash of
//! (model, request body); a cache hit never touches the network, so a frozen
//! cache makes every downstream stage reproducible.

mod cache;
mod pool;
mod transport;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{prompt_hash, ResponseCache, Transcript};
pub use pool::bounded_map;
use pool::Semaphore;
pub use transport::{HttpReply, Transport, TransportError, UreqTransport};

#[derive(Debug, Error)]
pub enum GateError {
    #[error("invalid endpoint configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("HTTP {status} from endpoint: {body}")]
    Permanent { status: u16, body: String },
    #[error("gave up after {attempts} attempt(s): {last}")]
    RetriesExhausted { attempts: usize, last: String },
    #[error("malformed response envelope: {0}")]
    MalformedResponse(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("no cached response for {0} and the gate is offline")]
    CacheMiss(String),
    #[error("cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_backoff_ms: 500,
            max_backoff_ms: 30_000,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: usize) -> Duration {
        let factor = self.multiplier.powi(retry.saturating_sub(1) as i32);
        let ms = (self.initial_backoff_ms as f64 * factor).min(self.max_backoff_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    /// Serve from the cache only; a miss is an error.
    pub offline: bool,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            token_env: "OPENAI_API_KEY".into(),
            max_in_flight: 8,
            retry: RetryPolicy::default(),
            timeout_secs: 120,
            temperature: 1.0,
            max_tokens: Some(4096),
            offline: false,
        }
    }
}

impl EndpointConfig {
    /// Lists every offending key.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        if self.base_url.trim().is_empty() {
            problems.push("endpoint.base_url must not be empty".to_string());
        } else if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            problems.push(format!("endpoint.base_url `{}` must be an http(s) URL", self.base_url));
        }
        if self.model.trim().is_empty() {
            problems.push("endpoint.model must not be empty".to_string());
        }
        if self.max_in_flight < 1 {
            problems.push("endpoint.max_in_flight must be at least 1".to_string());
        }
        if self.retry.max_attempts < 1 {
            problems.push("endpoint.retry.max_attempts must be at least 1".to_string());
        }
        if self.retry.multiplier.is_nan() || self.retry.multiplier < 1.0 {
            problems.push("endpoint.retry.multiplier must be >= 1".to_string());
        }
        if self.timeout_secs == 0 {
            problems.push("endpoint.timeout_secs must be positive".to_string());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            problems.push("endpoint.temperature must lie in [0, 2]".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    /// Overrides the configured temperature.
    pub temperature: Option<f64>,
}

impl ChatRequest {
    pub fn new(messages: Vec<ChatMessage>) -> Self {
        ChatRequest { messages, temperature: None }
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub model: String,
    pub prompt_hash: String,
    pub timestamp: String,
    pub latency_ms: u64,
    pub cached: bool,
}

/// Anything that can answer a chat request. Guideline generation is written
/// against this so tests can substitute scripted clients.
pub trait ChatClient: Sync {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, GateError>;
    fn model_name(&self) -> &str;
    /// Upper bound on concurrent requests worth issuing.
    fn max_in_flight(&self) -> usize {
        1
    }
}

pub struct Gate {
    cfg: EndpointConfig,
    cache: Option<ResponseCache>,
    transport: Arc<dyn Transport>,
    token: Option<String>,
    in_flight: Semaphore,
}

impl Gate {
    pub fn new(cfg: EndpointConfig, cache: Option<ResponseCache>) -> Result<Self, GateError> {
        let transport = Arc::new(UreqTransport::new(Duration::from_secs(cfg.timeout_secs.max(1))));
        Gate::with_transport(cfg, cache, transport)
    }

    pub fn with_transport(
        cfg: EndpointConfig,
        cache: Option<ResponseCache>,
        transport: Arc<dyn Transport>,
    ) -> Result<Self, GateError> {
        cfg.validate().map_err(GateError::Config)?;
        let token = std::env::var(&cfg.token_env).ok().filter(|t| !t.is_empty());
        if token.is_none() && !cfg.offline {
            log::debug!("{} is unset; requests go out without a bearer token", cfg.token_env);
        }
        let in_flight = Semaphore::new(cfg.max_in_flight);
        Ok(Gate { cfg, cache, transport, token, in_flight })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    /// The exact JSON body sent for `req`; also the cache key material.
    pub fn request_body(&self, req: &ChatRequest) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": self.cfg.model,
            "messages": req.messages,
            "temperature": req.temperature.unwrap_or(self.cfg.temperature),
        });
        if let Some(max) = self.cfg.max_tokens {
            body["max_tokens"] = max.into();
        }
        body["stream"] = false.into();
        body
    }

    fn send_with_retries(&self, body: &str) -> Result<String, GateError> {
        let url = self.cfg.completions_url();
        let policy = &self.cfg.retry;
        let mut last = String::new();
        for attempt in 1..=policy.max_attempts {
            if attempt > 1 {
                std::thread::sleep(policy.backoff(attempt - 1));
            }
            let reply = {
                let _permit = self.in_flight.acquire();
                self.transport.post_json(&url, self.token.as_deref(), body)
            };
            match reply {
                Ok(r) if (200..300).contains(&r.status) => return Ok(r.body),
                Ok(r) if r.status == 429 || (500..600).contains(&r.status) => {
                    log::warn!("attempt {attempt}: HTTP {} (transient)", r.status);
                    last = format!("HTTP {}: {}", r.status, truncate(&r.body, 200));
                }
                Ok(r) => {
                    return Err(GateError::Permanent { status: r.status, body: truncate(&r.body, 2000) })
                }
                Err(TransportError::Transient(msg)) => {
                    log::warn!("attempt {attempt}: {msg} (transient)");
                    last = msg;
                }
                Err(TransportError::Fatal(msg)) => return Err(GateError::Transport(msg)),
            }
        }
        Err(GateError::RetriesExhausted { attempts: policy.max_attempts, last })
    }

    /// Completes many requests with at most `max_in_flight` outstanding.
    /// Results line up with `reqs`.
    pub fn complete_batch(&self, reqs: &[ChatRequest]) -> Vec<Result<Completion, GateError>> {
        bounded_map(reqs, self.cfg.max_in_flight, |r| self.complete(r))
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_string()
    } else {
        s.chars().take(max).collect::<String>() + "…"
    }
}

/// Pulls `choices[0].message.content` out of a chat-completion response.
pub fn response_text(envelope: &serde_json::Value) -> Result<String, GateError> {
    envelope
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_owned)
        .ok_or_else(|| {
            GateError::MalformedResponse("missing choices[0].message.content".into())
        })
}

impl ChatClient for Gate {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, GateError> {
        let body_value = self.request_body(req);
        let body = serde_json::to_string(&body_value).expect("request serializes");
        let hash = prompt_hash(&self.cfg.model, &body);

        if let Some(cache) = &self.cache {
            if let Some(t) = cache.get(&hash)? {
                return Ok(Completion {
                    text: response_text(&t.response)?,
                    model: t.model,
                    prompt_hash: hash,
                    timestamp: t.timestamp,
                    latency_ms: t.latency_ms,
                    cached: true,
                });
            }
        }
        if self.cfg.offline {
            return Err(GateError::CacheMiss(hash));
        }

        let started = Instant::now();
        let raw = self.send_with_retries(&body)?;
        let latency_ms = started.elapsed().as_millis() as u64;
        let envelope: serde_json::Value = serde_json::from_str(&raw)
            .map_err(|e| GateError::MalformedResponse(format!("{e}: {}", truncate(&raw, 200))))?;
        let text = response_text(&envelope)?;
        let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        log::debug!("completion {hash} in {latency_ms} ms, {} chars", text.len());
        if let Some(cache) = &self.cache {
            cache.put(&Transcript {
                prompt_hash: hash.clone(),
                model: self.cfg.model.clone(),
                request: body_value,
                response: envelope,
                timestamp: timestamp.clone(),
                latency_ms,
            })?;
        }
        Ok(Completion {
            text,
            model: self.cfg.model.clone(),
            prompt_hash: hash,
            timestamp,
            latency_ms,
            cached: false,
        })
    }

    fn model_name(&self) -> &str {
        &self.cfg.model
    }

    fn max_in_flight(&self) -> usize {
        self.cfg.max_in_flight
    }
}
