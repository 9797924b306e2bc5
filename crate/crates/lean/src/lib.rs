//! Header-level tooling for Lean 4 theorem statements.
//!
//! This is a tokenizer plus a bracket-aware header parser, not an
//! elaborator: it understands identifiers, brackets, the top-level `:` and
//! `:=`, and unicode operators. Anything deeper is left to the prover.

mod error;
pub mod fingerprint;
pub mod lint;
pub mod normalize;
pub mod parse;
pub mod token;

pub use error::{LeanError, ParseError};
pub use fingerprint::{canonical_fingerprint, Fingerprint};
pub use lint::{apply_fixes, lint, LintRule, Linter, RuleRegistry};
pub use normalize::{normalize_statement, NamePolicy};
pub use parse::{parse_statement, Binder, BinderKind, DeclKeyword, ParsedTheorem, Terminator};
