//! Provider-agnostic chat completion with retries, rate limiting, usage
//! accounting and an append-only JSONL log of every attempt.
//!
//! Transports do the I/O: [`HttpTransport`] for real providers and
//! [`TableTransport`] for scripted or recorded responses. [`Gateway`] wraps
//! one transport with the retry policy and bookkeeping.

mod http;
mod table;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::game::AgentId;
use crate::seeds::{derive_seed, text_key, Stream};

pub use http::{ApiFormat, HttpTransport};
pub use table::{mock_from_transcript, TableTransport};

pub const DEFAULT_TEMPERATURE: f64 = 0.8;
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Strategy,
    Donation,
}

/// Where in the experiment a request was made. Part of the request id, so
/// identical prompts at different positions get different ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestContext {
    pub generation: u32,
    pub run: Option<u8>,
    pub round: Option<u32>,
    pub agent: AgentId,
    pub purpose: Purpose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub provider_tag: String,
    pub context: RequestContext,
    pub request_id: String,
}

impl CompletionRequest {
    pub fn new(
        system_text: String,
        user_text: String,
        context: RequestContext,
        settings: &RequestSettings,
    ) -> Self {
        let request_id = request_id(&context, &system_text, &user_text);
        Self {
            system_text,
            user_text,
            temperature: settings.temperature.max(0.0),
            max_tokens: settings.max_tokens,
            provider_tag: settings.provider_tag.clone(),
            context,
            request_id,
        }
    }
}

/// Per-request knobs copied from the provider config.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestSettings {
    pub temperature: f64,
    pub max_tokens: u32,
    pub provider_tag: String,
}

impl Default for RequestSettings {
    fn default() -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            provider_tag: "mock".into(),
        }
    }
}

/// SHA-256 over the request position and the full prompt text.
pub fn request_id(ctx: &RequestContext, system_text: &str, user_text: &str) -> String {
    let mut h = Sha256::new();
    let position = format!(
        "g={};run={};round={};agent={};purpose={:?}\n",
        ctx.generation,
        ctx.run.map_or("-".to_string(), |r| r.to_string()),
        ctx.round.map_or("-".to_string(), |r| r.to_string()),
        ctx.agent,
        ctx.purpose,
    );
    h.update(position.as_bytes());
    h.update(system_text.as_bytes());
    h.update([0u8]);
    h.update(user_text.as_bytes());
    hex::encode(&h.finalize()[..16])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    /// Rate limits, server errors and network failures.
    #[error("transient failure: {0}")]
    Retryable(String),
    #[error("request failed: {0}")]
    Fatal(String),
    #[error("no recorded response for request {0}")]
    UnknownRequest(String),
}

pub trait Transport: Send + Sync {
    fn send(&self, request: &CompletionRequest) -> Result<Completion, TransportError>;

    /// Provider name used as the usage-ledger key.
    fn tag(&self) -> &str;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("request {request_id} failed after {attempts} attempts: {last_error}")]
    Exhausted {
        request_id: String,
        attempts: u32,
        last_error: String,
    },
    #[error("request {request_id} failed: {message}")]
    Fatal { request_id: String, message: String },
    #[error("no recorded response for request {request_id}")]
    UnknownRequest { request_id: String },
    #[error("provider configuration: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn request_id(&self) -> Option<&str> {
        match self {
            GatewayError::Exhausted { request_id, .. }
            | GatewayError::Fatal { request_id, .. }
            | GatewayError::UnknownRequest { request_id } => Some(request_id),
            GatewayError::Config(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
    /// Extra delay drawn uniformly from `[0, jitter * delay)`.
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            jitter: 0.1,
        }
    }
}

impl RetryPolicy {
    /// Nominal delay before retry number `retry` (1-based), without jitter.
    pub fn nominal_delay(&self, retry: u32) -> Duration {
        self.base_delay
            .mul_f64(self.factor.powi(retry.saturating_sub(1) as i32))
    }
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, duration: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Global minimum spacing between requests to one provider.
pub struct RateLimiter {
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(requests_per_minute: Option<f64>) -> Self {
        let min_interval = match requests_per_minute {
            Some(rpm) if rpm > 0.0 => Duration::from_secs_f64(60.0 / rpm),
            _ => Duration::ZERO,
        };
        Self {
            min_interval,
            last: Mutex::new(None),
        }
    }

    pub fn min_interval(&self) -> Duration {
        self.min_interval
    }

    pub fn acquire(&self, sleeper: &dyn Sleeper) {
        if self.min_interval.is_zero() {
            return;
        }
        let mut last = self.last.lock().expect("rate limiter poisoned");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                sleeper.sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

/// Unit prices per million tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prices {
    pub input_per_mtok: f64,
    pub output_per_mtok: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProviderUsage {
    pub requests: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub retries: u64,
    pub estimated_cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub providers: BTreeMap<String, ProviderUsage>,
}

impl UsageLedger {
    fn record(&mut self, tag: &str, completion: Option<&Completion>, retries: u32, prices: Prices) {
        let entry = self.providers.entry(tag.to_string()).or_default();
        entry.requests += 1;
        entry.retries += u64::from(retries);
        if let Some(c) = completion {
            entry.input_tokens += c.input_tokens;
            entry.output_tokens += c.output_tokens;
        }
        entry.estimated_cost = cost(entry.input_tokens, entry.output_tokens, prices);
    }

    pub fn total_cost(&self) -> f64 {
        self.providers.values().map(|p| p.estimated_cost).sum()
    }
}

pub fn cost(input_tokens: u64, output_tokens: u64, prices: Prices) -> f64 {
    (input_tokens as f64 * prices.input_per_mtok + output_tokens as f64 * prices.output_per_mtok)
        / 1_000_000.0
}

/// Rough token count for transports that do not report usage.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Serialize)]
struct AttemptLog<'a> {
    request_id: &'a str,
    attempt: u32,
    provider: &'a str,
    context: &'a RequestContext,
    temperature: f64,
    system: &'a str,
    user: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    response: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_tokens: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_tokens: Option<u64>,
}

pub struct Gateway {
    transport: Box<dyn Transport>,
    policy: RetryPolicy,
    limiter: RateLimiter,
    sleeper: Arc<dyn Sleeper>,
    prices: Prices,
    retry_seed: u64,
    usage: Mutex<UsageLedger>,
    log: Mutex<Option<Box<dyn Write + Send>>>,
}

impl Gateway {
    pub fn new(transport: Box<dyn Transport>) -> Self {
        Self {
            transport,
            policy: RetryPolicy::default(),
            limiter: RateLimiter::per_minute(None),
            sleeper: Arc::new(ThreadSleeper),
            prices: Prices::default(),
            retry_seed: 0,
            usage: Mutex::new(UsageLedger::default()),
            log: Mutex::new(None),
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_rate_limit(mut self, requests_per_minute: Option<f64>) -> Self {
        self.limiter = RateLimiter::per_minute(requests_per_minute);
        self
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_prices(mut self, prices: Prices) -> Self {
        self.prices = prices;
        self
    }

    pub fn with_retry_seed(mut self, seed: u64) -> Self {
        self.retry_seed = seed;
        self
    }

    pub fn with_usage(self, usage: UsageLedger) -> Self {
        *self.usage.lock().expect("usage ledger poisoned") = usage;
        self
    }

    pub fn with_log(self, sink: Box<dyn Write + Send>) -> Self {
        *self.log.lock().expect("log poisoned") = Some(sink);
        self
    }

    pub fn tag(&self) -> &str {
        self.transport.tag()
    }

    pub fn usage(&self) -> UsageLedger {
        self.usage.lock().expect("usage ledger poisoned").clone()
    }

    fn log_attempt(&self, entry: &AttemptLog<'_>) {
        let mut guard = self.log.lock().expect("log poisoned");
        if let Some(sink) = guard.as_mut() {
            let line = serde_json::to_string(entry).expect("log entry serializes");
            if let Err(e) = writeln!(sink, "{line}").and_then(|_| sink.flush()) {
                tracing::warn!("failed to write request log: {e}");
            }
        }
    }

    /// Sends `request`, retrying transient failures with exponential backoff.
    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let tag = self.transport.tag().to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            self.retry_seed,
            Stream::Retry,
            &[text_key(&request.request_id)],
        ));
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.limiter.acquire(self.sleeper.as_ref());
            let result = self.transport.send(request);
            let mut entry = AttemptLog {
                request_id: &request.request_id,
                attempt,
                provider: &tag,
                context: &request.context,
                temperature: request.temperature,
                system: &request.system_text,
                user: &request.user_text,
                response: None,
                error: None,
                input_tokens: None,
                output_tokens: None,
            };
            match result {
                Ok(completion) => {
                    entry.response = Some(&completion.text);
                    entry.input_tokens = Some(completion.input_tokens);
                    entry.output_tokens = Some(completion.output_tokens);
                    self.log_attempt(&entry);
                    self.usage.lock().expect("usage ledger poisoned").record(
                        &tag,
                        Some(&completion),
                        attempt - 1,
                        self.prices,
                    );
                    return Ok(completion.text);
                }
                Err(err) => {
                    entry.error = Some(err.to_string());
                    self.log_attempt(&entry);
                    let fail = |this: &Self, e: GatewayError| {
                        this.usage.lock().expect("usage ledger poisoned").record(
                            &tag,
                            None,
                            attempt - 1,
                            this.prices,
                        );
                        Err(e)
                    };
                    match err {
                        TransportError::Retryable(msg) => {
                            if attempt >= self.policy.max_attempts {
                                return fail(
                                    self,
                                    GatewayError::Exhausted {
                                        request_id: request.request_id.clone(),
                                        attempts: attempt,
                                        last_error: msg,
                                    },
                                );
                            }
                            let nominal = self.policy.nominal_delay(attempt);
                            let extra = if self.policy.jitter > 0.0 {
                                nominal.mul_f64(rng.random_range(0.0..self.policy.jitter))
                            } else {
                                Duration::ZERO
                            };
                            tracing::debug!(
                                request_id = %request.request_id,
                                attempt,
                                "transient failure, retrying: {msg}"
                            );
                            self.sleeper.sleep(nominal + extra);
                        }
                        TransportError::Fatal(message) => {
                            return fail(
                                self,
                                GatewayError::Fatal {
                                    request_id: request.request_id.clone(),
                                    message,
                                },
                            )
                        }
                        TransportError::UnknownRequest(id) => {
                            return fail(self, GatewayError::UnknownRequest { request_id: id })
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Openai,
    Anthropic,
    /// Answers from a recorded transcript file.
    Transcript,
}

/// Provider settings from the `[provider]` config table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub endpoint: String,
    pub model: String,
    /// Credential reference, `env:VAR_NAME`.
    pub api_key: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub price_input_per_mtok: f64,
    pub price_output_per_mtok: f64,
    pub requests_per_minute: Option<f64>,
    pub timeout_secs: u64,
    pub transcript: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Openai,
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key: "env:OPENAI_API_KEY".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            price_input_per_mtok: 0.0,
            price_output_per_mtok: 0.0,
            requests_per_minute: None,
            timeout_secs: 120,
            transcript: None,
        }
    }
}

impl ProviderConfig {
    pub fn settings(&self) -> RequestSettings {
        RequestSettings {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            provider_tag: self.tag(),
        }
    }

    pub fn tag(&self) -> String {
        match self.kind {
            ProviderKind::Transcript => "transcript".into(),
            ProviderKind::Openai => format!("openai:{}", self.model),
            ProviderKind::Anthropic => format!("anthropic:{}", self.model),
        }
    }

    pub fn prices(&self) -> Prices {
        Prices {
            input_per_mtok: self.price_input_per_mtok,
            output_per_mtok: self.price_output_per_mtok,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err("provider.temperature must be a non-negative number".into());
        }
        if self.max_tokens == 0 {
            return Err("provider.max_tokens must be positive".into());
        }
        if self.kind == ProviderKind::Transcript && self.transcript.is_none() {
            return Err("provider.transcript is required for the transcript provider".into());
        }
        if self.price_input_per_mtok < 0.0 || self.price_output_per_mtok < 0.0 {
            return Err("provider prices must be non-negative".into());
        }
        Ok(())
    }

    /// Builds the transport, resolving the credential from the environment.
    pub fn transport(&self) -> Result<Box<dyn Transport>, GatewayError> {
        match self.kind {
            ProviderKind::Transcript => {
                let path = self
                    .transcript
                    .as_ref()
                    .ok_or_else(|| GatewayError::Config("provider.transcript missing".into()))?;
                Ok(Box::new(mock_from_transcript(path)?))
            }
            ProviderKind::Openai | ProviderKind::Anthropic => {
                let key = resolve_credential(&self.api_key)?;
                let format = if self.kind == ProviderKind::Openai {
                    ApiFormat::OpenAi
                } else {
                    ApiFormat::Anthropic
                };
                Ok(Box::new(HttpTransport::new(
                    format,
                    &self.endpoint,
                    &self.model,
                    key,
                    Duration::from_secs(self.timeout_secs),
                    self.tag(),
                )?))
            }
        }
    }
}

/// Resolves `env:NAME` to the value of environment variable `NAME`.
pub fn resolve_credential(reference: &str) -> Result<String, GatewayError> {
    let name = reference.strip_prefix("env:").ok_or_else(|| {
        GatewayError::Config(format!(
            "credential reference {reference:?} must have the form env:VAR_NAME"
        ))
    })?;
    std::env::var(name)
        .map_err(|_| GatewayError::Config(format!("environment variable {name} is not set")))
}
