use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("no fixture for prompt {prompt} and key {key:?}")]
    NoFixture { prompt: String, key: String },
    #[error("could not extract problems: {reason}")]
    ExtractionFailure { reason: String, raw: String },
    #[error("unknown backend kind {0:?}")]
    UnknownBackend(String),
    #[error("unknown prompt id {0:?}")]
    UnknownPrompt(String),
    #[error("prompt {prompt}: {reason}")]
    Template { prompt: String, reason: String },
    #[error("environment variable {0} with the API key is not set")]
    MissingApiKey(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

impl LlmError {
    /// Errors worth another attempt: the request may succeed unchanged.
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport(_) => true,
            LlmError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}
