use forge_core::CoreError;
use forge_pipeline::PipelineError;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_ENVIRONMENT: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

/// A failed command: what goes to stderr and which exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl CliError {
    pub fn new(exit: i32, code: &str, message: impl Into<String>) -> Self {
        CliError { exit, code: code.to_string(), message: message.into(), details: Value::Null }
    }

    pub fn validation(code: &str, message: impl Into<String>) -> Self {
        Self::new(EXIT_VALIDATION, code, message)
    }

    pub fn environment(code: &str, message: impl Into<String>) -> Self {
        Self::new(EXIT_ENVIRONMENT, code, message)
    }

    pub fn partial(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARTIAL, "partial", message)
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn to_json(&self) -> Value {
        json!({ "code": self.code, "message": self.message, "details": self.details })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

fn error_code(e: &PipelineError) -> &'static str {
    match e {
        PipelineError::Core(CoreError::Locked { .. }) => "store_locked",
        PipelineError::Core(CoreError::UnknownRound(_)) => "unknown_round",
        PipelineError::Core(CoreError::Unreviewed(_)) => "unreviewed",
        PipelineError::Core(CoreError::VersionMismatch { .. }) => "store_version",
        PipelineError::Core(_) => "store",
        PipelineError::Llm(_) => "llm",
        PipelineError::Repl(_) => "checker",
        PipelineError::Lean(_) => "lean",
        PipelineError::Config(_) => "config",
        PipelineError::Injected { .. } => "injected_fault",
        PipelineError::UnknownStrategy(_) => "unknown_strategy",
        PipelineError::Io { .. } => "io",
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let exit = if e.is_environment() { EXIT_ENVIRONMENT } else { EXIT_VALIDATION };
        let details = match &e {
            PipelineError::Core(CoreError::Unreviewed(ids)) => json!({ "candidates": ids }),
            _ => Value::Null,
        };
        CliError::new(exit, error_code(&e), e.to_string()).with_details(details)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<forge_repl::ReplError> for CliError {
    fn from(e: forge_repl::ReplError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<forge_lean::LeanError> for CliError {
    fn from(e: forge_lean::LeanError) -> Self {
        PipelineError::from(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Reads a whole file, mapping failures to an environment error.
pub fn read_file(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::from(PipelineError::io(path, e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let locked: CliError = CoreError::Locked { path: "s".into() }.into();
        assert_eq!((locked.exit, locked.code.as_str()), (EXIT_ENVIRONMENT, "store_locked"));
        let cfg: CliError = PipelineError::Config("bad".into()).into();
        assert_eq!(cfg.exit, EXIT_VALIDATION);
        let unknown: CliError = CoreError::UnknownRound(9).into();
        assert_eq!(unknown.code, "unknown_round");
        assert_eq!(unknown.to_json()["details"], Value::Null);
    }
}
