use std::sync::atomic::{AtomicUsize, Ordering};

use forge_core::{CompileKind, CompileVerdict, DiagMessage, MessageSeverity};
use forge_lean::{parse_statement, Terminator};
use serde::{Deserialize, Serialize};

use crate::classify::{classify_response, SORRY_WARNING};
use crate::error::ReplError;
use crate::sim;

/// Anything that can elaborate statements and proofs.
pub trait StatementChecker: Send + Sync {
    fn check_statement(&self, text: &str) -> Result<CompileVerdict, ReplError>;
    fn check_proof(&self, statement: &str, proof: &str) -> Result<CompileVerdict, ReplError>;
    fn env_tag(&self) -> String;
}

/// Replaces the statement's terminator with `:= <proof>`.
pub fn compose_proof(statement: &str, proof: &str) -> Result<String, ReplError> {
    let mut parsed =
        parse_statement(statement).map_err(|e| ReplError::Statement(format!("cannot attach proof: {e}")))?;
    let body = proof.trim();
    let body = body.strip_prefix(":=").map(str::trim_start).unwrap_or(body);
    parsed.terminator = Terminator::ProofBody(body.to_string());
    Ok(parsed.to_source())
}

/// Forces a verdict for any text containing `pattern`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Override {
    pub pattern: String,
    pub kind: CompileKind,
}

/// Rule-based stand-in for the prover. A statement fails when it does not
/// parse or still carries a fixable lint finding; `sorry` yields the usual
/// warning; anything else elaborates. Overrides take precedence.
#[derive(Debug, Default)]
pub struct MockChecker {
    pub overrides: Vec<Override>,
    calls: AtomicUsize,
}

impl MockChecker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_overrides(overrides: Vec<Override>) -> Self {
        MockChecker { overrides, calls: AtomicUsize::new(0) }
    }

    /// Number of checks served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn judge(&self, text: &str, expects_proof: bool) -> CompileVerdict {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(o) = self.overrides.iter().find(|o| text.contains(&o.pattern)) {
            let messages = match o.kind {
                CompileKind::StatementPass => vec![warning(SORRY_WARNING)],
                CompileKind::Error => vec![error("scripted failure")],
                _ => vec![],
            };
            return CompileVerdict { kind: o.kind, messages, elapsed_ms: 0, env_tag: self.env_tag() };
        }
        let messages: Vec<DiagMessage> = sim::simulate(text).messages.iter().map(|m| m.to_diag()).collect();
        let kind = classify_response(&messages, false, expects_proof);
        CompileVerdict { kind, messages, elapsed_ms: 0, env_tag: self.env_tag() }
    }
}

fn warning(text: &str) -> DiagMessage {
    DiagMessage { severity: MessageSeverity::Warning, text: text.into(), position: None }
}

fn error(text: &str) -> DiagMessage {
    DiagMessage { severity: MessageSeverity::Error, text: text.into(), position: None }
}

impl StatementChecker for MockChecker {
    fn check_statement(&self, text: &str) -> Result<CompileVerdict, ReplError> {
        Ok(self.judge(text, false))
    }

    fn check_proof(&self, statement: &str, proof: &str) -> Result<CompileVerdict, ReplError> {
        Ok(self.judge(&compose_proof(statement, proof)?, true))
    }

    fn env_tag(&self) -> String {
        format!("mock-{}", sim::DEFAULT_TAG)
    }
}
