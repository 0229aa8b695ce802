//! Chat-completion HTTP client with retries and a shared request ceiling.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use super::{LlmEndpointConfig, PromptPackage};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("endpoint returned HTTP {code}")]
    HttpStatus { code: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("could not reach endpoint: {0}")]
    Connect(String),
    #[error("bad endpoint configuration: {0}")]
    Config(String),
}

impl LlmError {
    /// True when the endpoint could not be reached or kept failing at the
    /// transport level.
    pub fn is_unavailable(&self) -> bool {
        match self {
            LlmError::Timeout { .. } | LlmError::Connect(_) => true,
            LlmError::HttpStatus { code, .. } => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(prompt: &PromptPackage, endpoint: &LlmEndpointConfig) -> Self {
        ChatRequest {
            model: endpoint.model_name.clone(),
            messages: vec![
                ChatMessage { role: "system".into(), content: prompt.system_text.clone() },
                ChatMessage { role: "user".into(), content: prompt.user_text.clone() },
            ],
            temperature: endpoint.temperature,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

enum Attempt {
    Done(String),
    Retry(LlmError),
    Fail(LlmError),
}

/// Cheap to clone; clones share the connection pool, the in-flight ceiling
/// and the request counter.
#[derive(Debug, Clone)]
pub struct LlmClient {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    http: reqwest::Client,
    endpoint: LlmEndpointConfig,
    url: String,
    api_key: Option<String>,
    permits: Semaphore,
    requests: AtomicU64,
}

impl LlmClient {
    pub fn new(endpoint: LlmEndpointConfig) -> Result<Self, LlmError> {
        endpoint.validate().map_err(LlmError::Config)?;
        let api_key = match &endpoint.api_key_ref {
            Some(var) => Some(
                std::env::var(var).map_err(|_| LlmError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let url = format!("{}/chat/completions", endpoint.base_url.trim_end_matches('/'));
        Ok(LlmClient {
            inner: Arc::new(Inner {
                http,
                url,
                api_key,
                permits: Semaphore::new(endpoint.max_concurrent_requests),
                requests: AtomicU64::new(0),
                endpoint,
            }),
        })
    }

    pub fn endpoint(&self) -> &LlmEndpointConfig {
        &self.inner.endpoint
    }

    /// HTTP requests sent so far, retries included.
    pub fn requests_sent(&self) -> u64 {
        self.inner.requests.load(Ordering::Relaxed)
    }

    /// Sends the prompt and returns the first choice's message content.
    /// Timeouts, connection failures, 408, 429 and 5xx are retried up to
    /// `max_retries` times with exponential backoff.
    pub async fn complete(&self, prompt: &PromptPackage) -> Result<String, LlmError> {
        let _permit = self
            .inner
            .permits
            .acquire()
            .await
            .map_err(|_| LlmError::Config("client closed".into()))?;
        let body = ChatRequest::new(prompt, &self.inner.endpoint);
        let max_retries = self.inner.endpoint.max_retries;
        let mut attempt = 0u32;
        loop {
            match self.attempt(&body, attempt + 1).await {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) if attempt >= max_retries => return Err(e),
                Attempt::Retry(e) => {
                    let delay = self.inner.endpoint.backoff_ms.saturating_mul(1u64 << attempt.min(16));
                    tracing::warn!(error = %e, attempt = attempt + 1, delay_ms = delay, "retrying chat completion");
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                    attempt += 1;
                }
            }
        }
    }

    async fn attempt(&self, body: &ChatRequest, attempts: u32) -> Attempt {
        self.inner.requests.fetch_add(1, Ordering::Relaxed);
        let mut req = self.inner.http.post(&self.inner.url).json(body);
        if let Some(key) = &self.inner.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return transport_error(e, attempts),
        };
        let status = resp.status();
        if !status.is_success() {
            let code = status.as_u16();
            let text = resp.text().await.unwrap_or_default();
            let body: String = text.chars().take(200).collect();
            let err = LlmError::HttpStatus { code, body };
            return if code == 408 || code == 429 || status.is_server_error() {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            };
        }
        let bytes = match resp.bytes().await {
            Ok(b) => b,
            Err(e) => return transport_error(e, attempts),
        };
        match serde_json::from_slice::<ChatResponse>(&bytes) {
            Ok(parsed) => match parsed.choices.into_iter().next() {
                Some(Choice { message: ResponseMessage { content: Some(c) } }) => Attempt::Done(c),
                Some(_) => Attempt::Fail(LlmError::MalformedResponse("first choice has no content".into())),
                None => Attempt::Fail(LlmError::MalformedResponse("no choices".into())),
            },
            Err(e) => Attempt::Fail(LlmError::MalformedResponse(e.to_string())),
        }
    }
}

fn transport_error(e: reqwest::Error, attempts: u32) -> Attempt {
    if e.is_timeout() {
        Attempt::Retry(LlmError::Timeout { attempts })
    } else if e.is_connect() || e.is_request() || e.is_body() {
        Attempt::Retry(LlmError::Connect(e.to_string()))
    } else {
        Attempt::Fail(LlmError::Connect(e.to_string()))
    }
}

/// One-shot call with a fresh client.
pub async fn ask_llm(prompt: &PromptPackage, endpoint: &LlmEndpointConfig) -> Result<String, LlmError> {
    LlmClient::new(endpoint.clone())?.complete(prompt).await
}
