use forge_core::{CompileKind, DiagMessage, MessageSeverity};

pub const SORRY_WARNING: &str = "declaration uses 'sorry'";

pub fn is_sorry_warning(m: &DiagMessage) -> bool {
    m.severity == MessageSeverity::Warning && m.text.contains(SORRY_WARNING)
}

/// Maps prover diagnostics to a verdict kind. Pure.
///
/// Any error means `error`. Without errors, a `sorry` warning (or a
/// statement-only check) means the statement elaborated; a proof check with
/// no `sorry` warning is a complete proof. Warnings other than the `sorry`
/// one (linters, deprecations) do not affect the verdict.
pub fn classify_response(messages: &[DiagMessage], had_timeout: bool, expects_proof: bool) -> CompileKind {
    if had_timeout {
        return CompileKind::Timeout;
    }
    if messages.iter().any(|m| m.severity == MessageSeverity::Error) {
        return CompileKind::Error;
    }
    if expects_proof && !messages.iter().any(is_sorry_warning) {
        CompileKind::ProofPass
    } else {
        CompileKind::StatementPass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(severity: MessageSeverity, text: &str) -> DiagMessage {
        DiagMessage { severity, text: text.into(), position: None }
    }

    #[test]
    fn table() {
        let sorry = msg(MessageSeverity::Warning, SORRY_WARNING);
        let err = msg(MessageSeverity::Error, "unknown identifier 'sqrt'");
        let lint = msg(MessageSeverity::Warning, "unused variable `h`");
        assert_eq!(classify_response(std::slice::from_ref(&sorry), false, false), CompileKind::StatementPass);
        assert_eq!(classify_response(&[], false, true), CompileKind::ProofPass);
        assert_eq!(classify_response(std::slice::from_ref(&err), false, false), CompileKind::Error);
        assert_eq!(classify_response(std::slice::from_ref(&sorry), false, true), CompileKind::StatementPass);
        assert_eq!(classify_response(&[sorry.clone(), err], false, false), CompileKind::Error);
        assert_eq!(classify_response(std::slice::from_ref(&lint), false, true), CompileKind::ProofPass);
        assert_eq!(classify_response(&[sorry, lint], false, false), CompileKind::StatementPass);
        assert_eq!(classify_response(&[], true, true), CompileKind::Timeout);
    }
}
