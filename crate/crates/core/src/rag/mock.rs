//! Local chat-completion test double driven by a rules file.
//!
//! One rule per line, `#` starts a comment:
//!
//! ```text
//! context: ibudilast & multiple sclerosis => Yes.
//! question: aspirin => No.
//! * => No.
//! ```
//!
//! A rule matches when every `&`-separated term occurs, ignoring case, in the
//! chosen part of the request: `prompt` (system and user text, the default),
//! `context` (the fact lines under the context header) or `question` (the text
//! after the question prefix). `*` matches anything. The first matching rule
//! wins; with no match the reply is empty.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::{Json, Router};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::{ChatRequest, PromptTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleScope {
    Prompt,
    Context,
    Question,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockRule {
    pub scope: RuleScope,
    /// Lowercased; empty means wildcard.
    pub terms: Vec<String>,
    pub reply: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockRules {
    pub rules: Vec<MockRule>,
    template: PromptTemplate,
}

impl MockRules {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, reply) = line
                .split_once("=>")
                .ok_or_else(|| format!("line {}: expected `terms => reply`", i + 1))?;
            let lhs = lhs.trim();
            let (scope, terms) = match lhs.split_once(':') {
                Some((s, rest)) => {
                    let scope = match s.trim().to_ascii_lowercase().as_str() {
                        "prompt" => RuleScope::Prompt,
                        "context" => RuleScope::Context,
                        "question" => RuleScope::Question,
                        other => return Err(format!("line {}: unknown scope `{other}`", i + 1)),
                    };
                    (scope, rest.trim())
                }
                None => (RuleScope::Prompt, lhs),
            };
            let terms: Vec<String> = if terms == "*" {
                Vec::new()
            } else {
                let t: Vec<String> = terms.split('&').map(|t| t.trim().to_lowercase()).collect();
                if t.iter().any(|t| t.is_empty()) {
                    return Err(format!("line {}: empty term", i + 1));
                }
                t
            };
            rules.push(MockRule {
                scope,
                terms,
                reply: reply.trim().to_string(),
            });
        }
        Ok(MockRules {
            rules,
            template: PromptTemplate::default(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Uses `template`'s headers to locate the context and question parts.
    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    /// Reply for a system/user message pair; empty when no rule matches.
    pub fn reply(&self, system: &str, user: &str) -> &str {
        let prompt = format!("{system}\n{user}").to_lowercase();
        let context = self.template.context_section(user).join("\n").to_lowercase();
        let question = self.template.question_section(user).to_lowercase();
        for rule in &self.rules {
            let haystack = match rule.scope {
                RuleScope::Prompt => &prompt,
                RuleScope::Context => &context,
                RuleScope::Question => &question,
            };
            if rule.terms.iter().all(|t| haystack.contains(t.as_str())) {
                return &rule.reply;
            }
        }
        ""
    }
}

#[derive(Clone)]
struct MockState {
    rules: Arc<MockRules>,
    requests: Arc<AtomicU64>,
}

/// Router answering `POST .../chat/completions` from `rules`.
pub fn router(rules: MockRules, requests: Arc<AtomicU64>) -> Router {
    Router::new().fallback(handle).with_state(MockState {
        rules: Arc::new(rules),
        requests,
    })
}

async fn handle(State(state): State<MockState>, method: Method, uri: Uri, body: Bytes) -> Response {
    if method != Method::POST || !uri.path().ends_with("/chat/completions") {
        return StatusCode::NOT_FOUND.into_response();
    }
    let n = state.requests.fetch_add(1, Ordering::Relaxed) + 1;
    let req: ChatRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return (StatusCode::BAD_REQUEST, Json(json!({"error": e.to_string()}))).into_response(),
    };
    let content_of = |role: &str| {
        req.messages
            .iter()
            .filter(|m| m.role == role)
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let reply = state.rules.reply(&content_of("system"), &content_of("user"));
    Json(json!({
        "id": format!("mock-{n}"),
        "object": "chat.completion",
        "model": req.model,
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": reply},
            "finish_reason": "stop"
        }]
    }))
    .into_response()
}

/// A mock server running on a background task.
pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<AtomicU64>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl MockServer {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub async fn spawn(rules: MockRules, addr: SocketAddr) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(AtomicU64::new(0));
        let app = router(rules, requests.clone());
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            let served = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
            if let Err(e) = served {
                tracing::error!(error = %e, "mock LLM server stopped");
            }
        });
        Ok(MockServer {
            addr,
            requests,
            shutdown: Some(tx),
            task,
        })
    }

    pub async fn spawn_local(rules: MockRules) -> std::io::Result<Self> {
        Self::spawn(rules, SocketAddr::from(([127, 0, 0, 1], 0))).await
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Value for `LlmEndpointConfig::base_url`.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RULES: &str = "\
# graph-context rule
context: ibudilast & multiple sclerosis => Yes.
question: aspirin => Maybe
* => No.
";

    fn user(facts: &[&str], q: &str) -> String {
        let mut s = String::new();
        if !facts.is_empty() {
            s.push_str("Knowledge graph facts:\n");
            for f in facts {
                s.push_str(f);
                s.push('\n');
            }
            s.push('\n');
        }
        s + "Question: " + q
    }

    #[test]
    fn parse_and_match() {
        let r = MockRules::parse(RULES).unwrap();
        assert_eq!(r.rules.len(), 3);
        let q = "Is ibudilast effective for multiple sclerosis?";
        assert_eq!(r.reply("sys", &user(&[], q)), "No.");
        let facts = ["CTRP Terminology subset includes concept Ibudilast.", "Multiple Sclerosis concept in subset CTRP Terminology."];
        assert_eq!(r.reply("sys", &user(&facts, q)), "Yes.");
        assert_eq!(r.reply("sys", &user(&[], "Does aspirin help?")), "Maybe");
    }

    #[test]
    fn no_match_is_empty() {
        let r = MockRules::parse("prompt: zebra => Yes").unwrap();
        assert_eq!(r.reply("s", "Question: horse"), "");
    }

    #[test]
    fn parse_errors() {
        assert!(MockRules::parse("no arrow here").is_err());
        assert!(MockRules::parse("bogus: a => b").is_err());
        assert!(MockRules::parse("a & => b").is_err());
    }
}
