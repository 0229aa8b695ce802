use serde::{Deserialize, Serialize};

use crate::textualize::FragmentOrder;

/// Retrieval and prompt-budget settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    /// Seed concepts taken from vector search. Zero disables graph context.
    pub seed_k: usize,
    pub max_hops: u32,
    pub max_edges: usize,
    pub per_node_fanout_cap: usize,
    /// Word budget for fact lines in the prompt.
    pub context_budget: usize,
    pub include_question_passages: bool,
    pub fragment_order: FragmentOrder,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            seed_k: 5,
            max_hops: 2,
            max_edges: 200,
            per_node_fanout_cap: 25,
            context_budget: 1500,
            include_question_passages: false,
            fragment_order: FragmentOrder::TailFirst,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_hops < 1 {
            return Err("max_hops must be at least 1".into());
        }
        if self.max_edges < 1 {
            return Err("max_edges must be at least 1".into());
        }
        if self.per_node_fanout_cap < 1 {
            return Err("per_node_fanout_cap must be at least 1".into());
        }
        if self.context_budget == 0 {
            return Err("context_budget must be positive".into());
        }
        Ok(())
    }
}

/// A chat-completion compatible HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_ref: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub temperature: f64,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Ceiling on in-flight requests across all callers of one client.
    pub max_concurrent_requests: usize,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        LlmEndpointConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model_name: "llama-3.1-8b-instruct".into(),
            api_key_ref: None,
            timeout_secs: 60.0,
            max_retries: 2,
            temperature: 0.0,
            backoff_ms: 500,
            max_concurrent_requests: 8,
        }
    }
}

impl LlmEndpointConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_secs > 0.0) {
            return Err("timeout_secs must be positive".into());
        }
        if self.max_concurrent_requests == 0 {
            return Err("max_concurrent_requests must be at least 1".into());
        }
        if self.base_url.trim().is_empty() {
            return Err("base_url is empty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let r = RetrievalConfig::default();
        assert_eq!((r.seed_k, r.max_hops, r.per_node_fanout_cap, r.max_edges, r.context_budget), (5, 2, 25, 200, 1500));
        r.validate().unwrap();
        let e = LlmEndpointConfig::default();
        assert_eq!(e.temperature, 0.0);
        e.validate().unwrap();
    }

    #[test]
    fn invalid_values() {
        let r = RetrievalConfig { max_hops: 0, ..Default::default() };
        assert!(r.validate().is_err());
        let r = RetrievalConfig { context_budget: 0, ..Default::default() };
        assert!(r.validate().is_err());
        let e = LlmEndpointConfig { timeout_secs: 0.0, ..Default::default() };
        assert!(e.validate().is_err());
    }
}
