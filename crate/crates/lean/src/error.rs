use forge_core::Span;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    /// 1-based line.
    pub line: usize,
    /// 1-based column, counted in characters.
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(src: &str, offset: usize, message: impl Into<String>) -> Self {
        let offset = offset.min(src.len());
        let before = &src[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError { offset, line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LeanError {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("fixable findings overlap at {0:?} and {1:?}")]
    OverlappingFixes(Span, Span),

    #[error("finding span {span:?} is outside the {len}-byte input")]
    SpanOutOfBounds { span: Span, len: usize },

    #[error("lint rule {0:?} is already registered")]
    DuplicateRule(String),

    #[error("unknown lint rule {0:?}")]
    UnknownRule(String),
}
