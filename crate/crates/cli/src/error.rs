use umlskg::eval::EvalError;
use umlskg::rag::{LlmError, RagError};

use crate::config::ConfigError;

/// Failure of a subcommand, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration.
    #[error("{0}")]
    Usage(String),
    /// Input files missing, unreadable or malformed.
    #[error("{0:#}")]
    Data(anyhow::Error),
    /// The LLM endpoint failed.
    #[error("{0:#}")]
    Upstream(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Upstream(_) => 3,
        }
    }

    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        CliError::Data(e.into())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => CliError::Data(e.into()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Upstream(e.into()),
        }
    }
}

impl From<RagError> for CliError {
    fn from(e: RagError) -> Self {
        match e {
            RagError::Llm(l) => l.into(),
            RagError::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Data(other.into()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EndpointUnavailable(_) => CliError::Upstream(e.into()),
            EvalError::Rag(r) => r.into(),
            other => CliError::Data(other.into()),
        }
    }
}
