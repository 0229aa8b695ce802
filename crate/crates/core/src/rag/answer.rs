use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expand::check_compatible;
use super::{
    ask_llm, build_prompt, expand_subgraph, retrieve_seeds, LlmClient, LlmEndpointConfig, PromptPackage,
    PromptTemplate, RagError, RetrievalConfig, SubgraphContext,
};
use crate::embed::{EmbeddingModel, VectorIndex};
use crate::store::GraphSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerLabel {
    Yes,
    No,
    Maybe,
    Unparseable,
}

impl AnswerLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerLabel::Yes => "yes",
            AnswerLabel::No => "no",
            AnswerLabel::Maybe => "maybe",
            AnswerLabel::Unparseable => "unparseable",
        }
    }
}

impl fmt::Display for AnswerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnswerLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" => Ok(AnswerLabel::Yes),
            "no" => Ok(AnswerLabel::No),
            "maybe" => Ok(AnswerLabel::Maybe),
            "unparseable" => Ok(AnswerLabel::Unparseable),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// Label set of the task being answered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerTask {
    YesNo,
    #[default]
    YesNoMaybe,
}

impl AnswerTask {
    pub fn allows(self, label: AnswerLabel) -> bool {
        match label {
            AnswerLabel::Yes | AnswerLabel::No => true,
            AnswerLabel::Maybe => self == AnswerTask::YesNoMaybe,
            AnswerLabel::Unparseable => false,
        }
    }
}

/// First standalone `yes`, `no` or (for three-way tasks) `maybe`, ignoring
/// case. Tokens are maximal runs of letters and digits.
pub fn parse_answer(raw: &str, task: AnswerTask) -> AnswerLabel {
    for token in raw.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let label = match token.to_lowercase().as_str() {
            "yes" => AnswerLabel::Yes,
            "no" => AnswerLabel::No,
            "maybe" => AnswerLabel::Maybe,
            _ => continue,
        };
        if task.allows(label) {
            return label;
        }
    }
    AnswerLabel::Unparseable
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedAnswer {
    pub label: AnswerLabel,
    pub raw_text: String,
    pub context: SubgraphContext,
    pub prompt: PromptPackage,
}

/// Snapshot, index and model that belong together.
#[derive(Debug, Clone)]
pub struct GraphResources {
    pub snapshot: Arc<GraphSnapshot>,
    pub index: Arc<VectorIndex>,
    pub model: Arc<EmbeddingModel>,
}

impl GraphResources {
    pub fn new(snapshot: GraphSnapshot, index: VectorIndex, model: EmbeddingModel) -> Result<Self, RagError> {
        check_compatible(&index, &model)?;
        Ok(GraphResources {
            snapshot: Arc::new(snapshot),
            index: Arc::new(index),
            model: Arc::new(model),
        })
    }
}

/// Long-lived question answerer. Without graph resources every question
/// gets the no-context prompt.
#[derive(Debug, Clone)]
pub struct RagPipeline {
    graph: Option<GraphResources>,
    retrieval: RetrievalConfig,
    template: Arc<PromptTemplate>,
    client: LlmClient,
}

impl RagPipeline {
    pub fn new(
        graph: Option<GraphResources>,
        retrieval: RetrievalConfig,
        template: PromptTemplate,
        client: LlmClient,
    ) -> Result<Self, RagError> {
        retrieval.validate().map_err(RagError::InvalidConfig)?;
        Ok(RagPipeline {
            graph,
            retrieval,
            template: Arc::new(template),
            client,
        })
    }

    /// Same endpoint and template, no graph context.
    pub fn without_graph(&self) -> Self {
        RagPipeline { graph: None, ..self.clone() }
    }

    pub fn graph(&self) -> Option<&GraphResources> {
        self.graph.as_ref()
    }

    pub fn retrieval(&self) -> &RetrievalConfig {
        &self.retrieval
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }

    /// Seeds and subgraph for `question` under `config`.
    pub fn retrieve_with(&self, question: &str, config: &RetrievalConfig) -> Result<SubgraphContext, RagError> {
        config.validate().map_err(RagError::InvalidConfig)?;
        let Some(g) = &self.graph else {
            return Ok(SubgraphContext::default());
        };
        let seeds = retrieve_seeds(question, &g.index, &g.model, config)?;
        expand_subgraph(&seeds, &g.snapshot, config)
    }

    pub fn retrieve(&self, question: &str) -> Result<SubgraphContext, RagError> {
        self.retrieve_with(question, &self.retrieval)
    }

    pub async fn answer(&self, question: &str, passages: &[String], task: AnswerTask) -> Result<GroundedAnswer, RagError> {
        let context = self.retrieve(question)?;
        let prompt = build_prompt(question, passages, &context, &self.retrieval, &self.template);
        let raw_text = self.client.complete(&prompt).await?;
        Ok(GroundedAnswer {
            label: parse_answer(&raw_text, task),
            raw_text,
            context,
            prompt,
        })
    }
}

/// One question end to end with the bundled prompt template and a
/// three-way label set.
pub async fn answer_question(
    question: &str,
    snapshot: &GraphSnapshot,
    index: &VectorIndex,
    model: &EmbeddingModel,
    config: &RetrievalConfig,
    endpoint: &LlmEndpointConfig,
) -> Result<GroundedAnswer, RagError> {
    config.validate().map_err(RagError::InvalidConfig)?;
    let seeds = retrieve_seeds(question, index, model, config)?;
    let context = expand_subgraph(&seeds, snapshot, config)?;
    let prompt = build_prompt(question, &[], &context, config, &PromptTemplate::default());
    let raw_text = ask_llm(&prompt, endpoint).await?;
    Ok(GroundedAnswer {
        label: parse_answer(&raw_text, AnswerTask::YesNoMaybe),
        raw_text,
        context,
        prompt,
    })
}
