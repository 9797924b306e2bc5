//! Wire types of the Lean REPL.

use forge_core::{CompileKind, DiagMessage, MessageSeverity, Position};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplRequest {
    pub cmd: String,
    /// Absent for the header command that creates environment 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub env: Option<u32>,
}

impl ReplRequest {
    /// Encoded request followed by the blank line that terminates it.
    pub fn to_wire(&self) -> String {
        let mut s = serde_json::to_string(self).expect("request serializes");
        s.push_str("\n\n");
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplPos {
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplMessage {
    pub severity: String,
    pub pos: Option<ReplPos>,
    #[serde(rename = "endPos", default, skip_serializing_if = "Option::is_none")]
    pub end_pos: Option<ReplPos>,
    pub data: String,
}

impl ReplMessage {
    pub fn new(severity: &str, line: u32, column: u32, data: impl Into<String>) -> Self {
        ReplMessage { severity: severity.into(), pos: Some(ReplPos { line, column }), end_pos: None, data: data.into() }
    }

    pub fn to_diag(&self) -> DiagMessage {
        let severity = match self.severity.as_str() {
            "error" => MessageSeverity::Error,
            "warning" => MessageSeverity::Warning,
            _ => MessageSeverity::Info,
        };
        DiagMessage {
            severity,
            text: self.data.clone(),
            position: self.pos.as_ref().map(|p| Position { line: p.line, column: p.column }),
        }
    }
}

/// One response object. A command the REPL itself rejects comes back as
/// `{"message": ...}` with no environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<u32>,
    #[serde(default)]
    pub messages: Vec<ReplMessage>,
    #[serde(default)]
    pub sorries: Vec<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ReplResponse {
    pub fn diagnostics(&self) -> Vec<DiagMessage> {
        let mut out: Vec<DiagMessage> = self.messages.iter().map(ReplMessage::to_diag).collect();
        if let Some(m) = &self.message {
            out.push(DiagMessage { severity: MessageSeverity::Error, text: m.clone(), position: None });
        }
        out
    }
}

/// A recorded exchange used to replay classification without a prover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseFixture {
    pub name: String,
    #[serde(default)]
    pub cmd: String,
    pub expects_proof: bool,
    pub had_timeout: bool,
    pub response: Option<ReplResponse>,
    pub expected: CompileKind,
}
