use thiserror::Error;

use crate::fault::Stage;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] forge_core::CoreError),
    #[error(transparent)]
    Llm(#[from] forge_llm::LlmError),
    #[error(transparent)]
    Repl(#[from] forge_repl::ReplError),
    #[error(transparent)]
    Lean(#[from] forge_lean::LeanError),
    #[error("config: {0}")]
    Config(String),
    #[error("injected fault at {stage} call {call}")]
    Injected { stage: Stage, call: u64 },
    #[error("unknown review strategy {0:?}")]
    UnknownStrategy(String),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

impl PipelineError {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    /// True for failures of the toolchain or environment rather than of the
    /// input: a missing prover, an unreachable model, a locked store.
    pub fn is_environment(&self) -> bool {
        match self {
            PipelineError::Repl(_) | PipelineError::Io { .. } => true,
            PipelineError::Llm(e) => e.is_retryable() || matches!(e, forge_llm::LlmError::MissingApiKey(_)),
            PipelineError::Core(e) => matches!(
                e,
                forge_core::CoreError::Locked { .. }
                    | forge_core::CoreError::Io { .. }
                    | forge_core::CoreError::VersionMismatch { .. }
            ),
            _ => false,
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
