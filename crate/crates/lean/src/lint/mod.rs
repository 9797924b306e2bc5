//! False-pattern lint.
//!
//! Rules run in three phases. Token rules see single tokens or short runs
//! (`2a`, `sqrt`, `^(1/3)`). Structural rules see bracket-delimited
//! segments and may absorb token fixes into their own rewrite; an absorbed
//! fix is demoted to a flag so the fixable set never overlaps. Semantic rules
//! compare the statement against the natural-language problem and only
//! flag.

mod rules;
mod semantic;

use std::sync::{Arc, LazyLock};

use forge_core::{Finding, FindingSeverity, LintReport, Span};

use crate::error::LeanError;
use crate::parse::{match_brackets, parse_with_layout, ParsedTheorem};
use crate::token::{significant, tokenize, Token, TokenKind};

pub use rules::{ChainedInequality, MissingOperator, NamespaceQualification, NatDivision};
pub use semantic::{AllSolutions, Digits, Infinitude, MissingExtremumWitness, SolutionCount, TriangleCondition};

pub const PARSE_FAILURE: &str = "parse_failure";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Token,
    Structural,
    Semantic,
}

pub trait LintRule: Send + Sync {
    fn id(&self) -> &'static str;
    fn phase(&self) -> Phase;
    fn description(&self) -> &'static str;
    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding>;
}

/// Everything a rule may look at. Built once per statement.
pub struct LintContext<'a> {
    pub text: &'a str,
    pub nl_text: Option<&'a str>,
    /// Significant tokens of the whole text.
    pub tokens: Vec<Token>,
    /// Index of the matching bracket for every bracket token.
    pub matching: Vec<Option<usize>>,
    /// `None` when the text is a bare expression rather than a declaration.
    pub parsed: Option<ParsedTheorem>,
    /// Byte ranges holding expressions (binder types and the goal).
    pub regions: Vec<Span>,
    pub goal: Span,
    /// Findings from earlier phases.
    pub earlier: Vec<Finding>,
    real: bool,
}

impl<'a> LintContext<'a> {
    pub fn token_text(&self, i: usize) -> &'a str {
        self.tokens[i].text(self.text)
    }

    /// Token index range covered by `span`.
    pub fn token_range(&self, span: Span) -> std::ops::Range<usize> {
        let lo = self.tokens.partition_point(|t| t.span.start < span.start);
        let hi = self.tokens.partition_point(|t| t.span.end <= span.end);
        lo..hi.max(lo)
    }

    /// Whether the statement mentions the reals anywhere.
    pub fn real_context(&self) -> bool {
        self.real
    }

    pub fn slice(&self, span: Span) -> &'a str {
        &self.text[span.start..span.end]
    }

    /// Source of `span` with every earlier fixable finding inside it applied.
    pub fn rewritten(&self, span: Span) -> String {
        let mut inner: Vec<&Finding> =
            self.earlier.iter().filter(|f| f.severity == FindingSeverity::Fixable && span.contains(&f.span)).collect();
        inner.sort_by_key(|f| std::cmp::Reverse(f.span.start));
        let mut out = self.slice(span).to_string();
        for f in inner {
            let local = Span::new(f.span.start - span.start, f.span.end - span.start);
            out.replace_range(local.start..local.end, f.suggestion.as_deref().unwrap_or(""));
        }
        out
    }
}

pub struct RuleRegistry {
    rules: Vec<Arc<dyn LintRule>>,
}

impl std::fmt::Debug for RuleRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.ids()).finish()
    }
}

impl Default for RuleRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RuleRegistry {
    pub fn empty() -> Self {
        RuleRegistry { rules: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        let builtin: [Arc<dyn LintRule>; 10] = [
            Arc::new(NamespaceQualification),
            Arc::new(MissingOperator),
            Arc::new(NatDivision),
            Arc::new(ChainedInequality),
            Arc::new(TriangleCondition),
            Arc::new(AllSolutions),
            Arc::new(SolutionCount),
            Arc::new(MissingExtremumWitness),
            Arc::new(Infinitude),
            Arc::new(Digits),
        ];
        for rule in builtin {
            r.register(rule).expect("builtin ids are distinct");
        }
        r
    }

    pub fn register(&mut self, rule: Arc<dyn LintRule>) -> Result<(), LeanError> {
        if self.get(rule.id()).is_some() {
            return Err(LeanError::DuplicateRule(rule.id().to_string()));
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn LintRule>> {
        self.rules.iter().find(|r| r.id() == id)
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.rules.iter().map(|r| r.id()).collect()
    }

    pub fn rules(&self) -> &[Arc<dyn LintRule>] {
        &self.rules
    }

    /// A registry restricted to `ids`, in the given order.
    pub fn only<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self, LeanError> {
        let mut r = Self::empty();
        for id in ids {
            let rule = self.get(id.as_ref()).ok_or_else(|| LeanError::UnknownRule(id.as_ref().to_string()))?;
            r.register(Arc::clone(rule))?;
        }
        Ok(r)
    }
}

#[derive(Debug, Default)]
pub struct Linter {
    registry: RuleRegistry,
}

impl Linter {
    pub fn new(registry: RuleRegistry) -> Self {
        Linter { registry }
    }

    pub fn registry(&self) -> &RuleRegistry {
        &self.registry
    }

    pub fn lint(&self, text: &str, nl_text: Option<&str>) -> LintReport {
        let mut ctx = match build_context(text, nl_text) {
            Ok(Some(ctx)) => ctx,
            Ok(None) => return LintReport::default(),
            Err(()) => return parse_failure(text),
        };
        for phase in [Phase::Token, Phase::Structural, Phase::Semantic] {
            let mut found = Vec::new();
            for rule in self.registry.rules.iter().filter(|r| r.phase() == phase) {
                found.extend(rule.check(&ctx));
            }
            ctx.earlier.extend(found);
        }
        let mut findings = ctx.earlier;
        resolve_overlaps(&mut findings);
        findings.sort_by(|a, b| (a.span.start, a.span.end, &a.rule_id).cmp(&(b.span.start, b.span.end, &b.rule_id)));
        LintReport { findings }
    }

    /// Lints a document of blank-line separated statements. Spans are
    /// relative to the whole document.
    pub fn lint_document(&self, text: &str, nl_text: Option<&str>) -> LintReport {
        let mut findings = Vec::new();
        for chunk in split_statements(text) {
            let report = self.lint(&text[chunk.start..chunk.end], nl_text);
            findings.extend(report.findings.into_iter().map(|mut f| {
                f.span = f.span.shifted(chunk.start);
                f
            }));
        }
        LintReport { findings }
    }
}

static BUILTIN: LazyLock<Linter> = LazyLock::new(Linter::default);

/// Lints with the builtin rule set.
pub fn lint(text: &str, nl_text: Option<&str>) -> LintReport {
    BUILTIN.lint(text, nl_text)
}

/// Applies every fixable suggestion, right to left.
pub fn apply_fixes(text: &str, report: &LintReport) -> Result<String, LeanError> {
    let mut fixes: Vec<&Finding> = report.fixable().collect();
    fixes.sort_by_key(|f| (f.span.start, f.span.end));
    for f in &fixes {
        if f.span.end > text.len() || !text.is_char_boundary(f.span.start) || !text.is_char_boundary(f.span.end) {
            return Err(LeanError::SpanOutOfBounds { span: f.span, len: text.len() });
        }
    }
    for pair in fixes.windows(2) {
        if pair[0].span.overlaps(&pair[1].span) || pair[0].span == pair[1].span {
            return Err(LeanError::OverlappingFixes(pair[0].span, pair[1].span));
        }
    }
    let mut out = text.to_string();
    for f in fixes.iter().rev() {
        out.replace_range(f.span.start..f.span.end, f.suggestion.as_deref().unwrap_or(""));
    }
    Ok(out)
}

/// Byte ranges of the blank-line separated chunks in `text`, each trimmed
/// of surrounding whitespace. Empty chunks are skipped.
pub fn split_statements(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end();
        if trimmed.trim_start().is_empty() {
            if let Some(s) = start.take() {
                spans.push(Span::new(s, end));
            }
        } else {
            let lead = line.len() - line.trim_start().len();
            start.get_or_insert(offset + lead);
            end = offset + trimmed.len();
        }
        offset += line.len();
    }
    if let Some(s) = start {
        spans.push(Span::new(s, end));
    }
    spans
}

fn parse_failure(text: &str) -> LintReport {
    LintReport {
        findings: vec![Finding {
            rule_id: PARSE_FAILURE.into(),
            span: Span::new(0, text.len()),
            severity: FindingSeverity::Flag,
            suggestion: None,
        }],
    }
}

/// `Ok(None)` for text with no tokens, `Err` for unparseable text.
fn build_context<'a>(text: &'a str, nl_text: Option<&'a str>) -> Result<Option<LintContext<'a>>, ()> {
    let all = tokenize(text).map_err(|_| ())?;
    let tokens = significant(&all);
    if tokens.is_empty() {
        return Ok(None);
    }
    let matching = match_brackets(text, &tokens).map_err(|_| ())?;
    let declares = tokens.iter().any(|t| t.kind == TokenKind::Ident && matches!(t.text(text), "theorem" | "lemma"));
    let (parsed, regions, goal) = if declares {
        let (parsed, layout) = parse_with_layout(text).map_err(|_| ())?;
        let regions = layout.expression_regions().collect();
        (Some(parsed), regions, layout.goal)
    } else {
        // a bare expression, e.g. a fragment copied out of a statement
        let whole = Span::new(tokens[0].span.start, tokens[tokens.len() - 1].span.end);
        (None, vec![whole], whole)
    };
    let real = tokens.iter().any(|t| {
        let s = t.text(text);
        s == "ℝ" || s == "Real" || s.starts_with("Real.")
    });
    Ok(Some(LintContext { text, nl_text, tokens, matching, parsed, regions, goal, earlier: Vec::new(), real }))
}

/// Demotes fixable findings that overlap a wider fixable finding. Wider
/// rewrites already incorporate the narrower fixes they contain.
fn resolve_overlaps(findings: &mut [Finding]) {
    let mut order: Vec<usize> =
        (0..findings.len()).filter(|&i| findings[i].severity == FindingSeverity::Fixable).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(findings[i].span.len()), findings[i].span.start));
    let mut kept: Vec<Span> = Vec::new();
    for i in order {
        let span = findings[i].span;
        if kept.iter().any(|k| k.overlaps(&span) || *k == span) {
            findings[i].severity = FindingSeverity::Flag;
        } else {
            kept.push(span);
        }
    }
}
