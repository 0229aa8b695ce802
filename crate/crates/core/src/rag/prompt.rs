//! Versioned prompt templates and prompt assembly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RetrievalConfig, SubgraphContext};
use crate::store::codec::sha256_hex;
use crate::textualize::word_count;

const DEFAULT_TEMPLATE: &str = include_str!("../../templates/prompt-v1.txt");

/// Prompt wording, loaded from a sectioned text file:
///
/// ```text
/// [version]
/// v1
/// [system]
/// ...
/// ```
///
/// Sections: `version`, `system`, `passages_header`, `context_header`,
/// `question_prefix`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub version: String,
    pub system: String,
    pub passages_header: String,
    pub context_header: String,
    pub question_prefix: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("bundled template parses")
    }
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut sections: Vec<(String, Vec<&str>)> = Vec::new();
        for line in text.lines() {
            let trimmed = line.trim();
            if trimmed.starts_with('[') && trimmed.ends_with(']') && trimmed.len() > 2 {
                sections.push((trimmed[1..trimmed.len() - 1].to_string(), Vec::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push(line);
            } else if !trimmed.is_empty() {
                return Err(format!("text before first section: `{trimmed}`"));
            }
        }
        let get = |name: &str| -> Result<String, String> {
            let matches: Vec<_> = sections.iter().filter(|(n, _)| n == name).collect();
            match matches.as_slice() {
                [(_, body)] => Ok(body.join("\n").trim().to_string()),
                [] => Err(format!("missing section [{name}]")),
                _ => Err(format!("duplicate section [{name}]")),
            }
        };
        for (name, _) in &sections {
            if !["version", "system", "passages_header", "context_header", "question_prefix"].contains(&name.as_str()) {
                return Err(format!("unknown section [{name}]"));
            }
        }
        let t = PromptTemplate {
            version: get("version")?,
            system: get("system")?,
            passages_header: get("passages_header")?,
            context_header: get("context_header")?,
            question_prefix: get("question_prefix")?,
        };
        if t.context_header.is_empty() || t.question_prefix.is_empty() {
            return Err("context_header and question_prefix must be non-empty".into());
        }
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| format!("{}: {e}", path.as_ref().display()))?;
        Self::parse(&text)
    }

    /// SHA-256 over all sections; pins reports to exact wording.
    pub fn hash(&self) -> String {
        let canonical = format!(
            "version\n{}\nsystem\n{}\npassages_header\n{}\ncontext_header\n{}\nquestion_prefix\n{}\n",
            self.version, self.system, self.passages_header, self.context_header, self.question_prefix
        );
        sha256_hex(canonical.as_bytes())
    }

    /// Fact lines of a user message built from this template: the lines after
    /// the context header up to the first blank line.
    pub fn context_section<'a>(&self, user_text: &'a str) -> Vec<&'a str> {
        let mut lines = user_text.lines();
        if !lines.any(|l| l == self.context_header) {
            return Vec::new();
        }
        lines.take_while(|l| !l.is_empty()).collect()
    }

    /// Text after the question prefix.
    pub fn question_section<'a>(&self, user_text: &'a str) -> &'a str {
        let marker = format!("{} ", self.question_prefix);
        match user_text.rfind(&marker) {
            Some(i) => &user_text[i + marker.len()..],
            None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPackage {
    pub system_text: String,
    pub user_text: String,
    /// Words in the fact lines that made it into `user_text`.
    pub context_word_count: usize,
    /// Indices into the context's fragments that were kept, in context order.
    pub retained: Vec<usize>,
    pub template_hash: String,
}

impl PromptPackage {
    /// SHA-256 of the exact messages sent.
    pub fn hash(&self) -> String {
        sha256_hex(format!("{}\u{0}{}", self.system_text, self.user_text).as_bytes())
    }
}

/// Indices of fragments kept under `budget` words. Fragments are dropped one
/// at a time, highest hop first and latest discovered first within a hop.
pub fn truncate_to_budget(context: &SubgraphContext, budget: usize) -> Vec<usize> {
    let words: Vec<usize> = context.fragments.iter().map(|f| word_count(&f.text) as usize).collect();
    let mut total: usize = words.iter().sum();
    let mut order: Vec<usize> = (0..words.len()).collect();
    // drop order: last element is dropped first
    order.sort_by_key(|&i| (context.paths.get(i).map_or(0, |p| p.hop), i));
    let mut keep = vec![true; words.len()];
    while total > budget {
        let Some(i) = order.pop() else { break };
        keep[i] = false;
        total -= words[i];
    }
    (0..words.len()).filter(|&i| keep[i]).collect()
}

/// Assembles system and user messages. With an empty context (and no
/// passages) the user message is just the question line.
pub fn build_prompt(
    question: &str,
    passages: &[String],
    context: &SubgraphContext,
    config: &RetrievalConfig,
    template: &PromptTemplate,
) -> PromptPackage {
    let retained = truncate_to_budget(context, config.context_budget);
    let mut user = String::new();
    if config.include_question_passages && !passages.is_empty() {
        user.push_str(&template.passages_header);
        user.push('\n');
        for p in passages {
            user.push_str(p.trim());
            user.push('\n');
        }
        user.push('\n');
    }
    let mut context_word_count = 0;
    if !retained.is_empty() {
        user.push_str(&template.context_header);
        user.push('\n');
        for &i in &retained {
            let text = &context.fragments[i].text;
            context_word_count += word_count(text) as usize;
            user.push_str(text);
            user.push('\n');
        }
        user.push('\n');
    }
    user.push_str(&template.question_prefix);
    user.push(' ');
    user.push_str(question.trim());
    PromptPackage {
        system_text: template.system.clone(),
        user_text: user,
        context_word_count,
        retained,
        template_hash: template.hash(),
    }
}
