//! Graph-grounded question answering.
//!
//! A question is embedded and matched against the concept index to pick seed
//! concepts; the graph around the seeds is expanded breadth first, rendered
//! as one-line facts, packed into a prompt under a word budget and sent to a
//! chat-completion endpoint. The reply is reduced to yes/no/maybe.

mod answer;
mod config;
mod expand;
mod llm;
pub mod mock;
mod prompt;

pub use answer::{answer_question, parse_answer, AnswerLabel, AnswerTask, GraphResources, GroundedAnswer, RagPipeline};
pub use config::{LlmEndpointConfig, RetrievalConfig};
pub use expand::{expand_subgraph, retrieve_seeds, FragmentPath, SubgraphContext};
pub use llm::{ask_llm, ChatMessage, ChatRequest, LlmClient, LlmError};
pub use prompt::{build_prompt, truncate_to_budget, PromptPackage, PromptTemplate};

use crate::embed::EmbedError;
use crate::store::StoreError;

#[derive(Debug, thiserror::Error)]
pub enum RagError {
    #[error("unknown CUI `{0}`")]
    UnknownCui(String),
    #[error("index was built with model {index}, but the loaded model is {model}")]
    ModelMismatch { index: String, model: String },
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Store(StoreError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

impl From<StoreError> for RagError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownCui(c) => RagError::UnknownCui(c),
            other => RagError::Store(other),
        }
    }
}
