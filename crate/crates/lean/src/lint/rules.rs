use forge_core::{Finding, FindingSeverity, Span};

use super::{LintContext, LintRule, Phase};
use crate::token::TokenKind;

fn finding(rule_id: &str, span: Span, severity: FindingSeverity, suggestion: impl Into<String>) -> Finding {
    Finding { rule_id: rule_id.into(), span, severity, suggestion: Some(suggestion.into()) }
}

fn fixable_if(cond: bool) -> FindingSeverity {
    if cond {
        FindingSeverity::Fixable
    } else {
        FindingSeverity::Flag
    }
}

/// Unqualified functions that only resolve under a namespace.
const QUALIFY: &[(&str, &str)] = &[("sqrt", "Real.sqrt")];

pub struct NamespaceQualification;

impl LintRule for NamespaceQualification {
    fn id(&self) -> &'static str {
        "namespace_qualification"
    }

    fn phase(&self) -> Phase {
        Phase::Token
    }

    fn description(&self) -> &'static str {
        "unqualified real function such as `sqrt`; use `Real.sqrt`"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        let mut out = Vec::new();
        for region in &ctx.regions {
            for i in ctx.token_range(*region) {
                let t = ctx.tokens[i];
                if t.kind != TokenKind::Ident {
                    continue;
                }
                if let Some((_, q)) = QUALIFY.iter().find(|(bare, _)| *bare == ctx.token_text(i)) {
                    out.push(finding(self.id(), t.span, fixable_if(ctx.real_context()), *q));
                }
            }
        }
        out
    }
}

pub struct MissingOperator;

impl LintRule for MissingOperator {
    fn id(&self) -> &'static str {
        "missing_operator"
    }

    fn phase(&self) -> Phase {
        Phase::Token
    }

    fn description(&self) -> &'static str {
        "numeral juxtaposed with a one-letter variable, as in `2a`; insert `*`"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        let mut out = Vec::new();
        for region in &ctx.regions {
            let range = ctx.token_range(*region);
            for i in range.start..range.end.saturating_sub(1) {
                let (num, var) = (ctx.tokens[i], ctx.tokens[i + 1]);
                if num.kind != TokenKind::Number || var.kind != TokenKind::Ident || num.span.end != var.span.start {
                    continue;
                }
                let num_text = ctx.token_text(i);
                let var_text = ctx.token_text(i + 1);
                if !num_text.bytes().all(|b| b.is_ascii_digit() || b == b'.') || var_text.chars().count() != 1 {
                    continue;
                }
                // `x.2a` is a projection, not arithmetic
                if i > 0 && ctx.token_text(i - 1) == "." && ctx.tokens[i - 1].span.end == num.span.start {
                    continue;
                }
                let span = Span::new(num.span.start, var.span.end);
                out.push(finding(self.id(), span, FindingSeverity::Fixable, format!("{num_text}*{var_text}")));
            }
        }
        out
    }
}

pub struct NatDivision;

impl LintRule for NatDivision {
    fn id(&self) -> &'static str {
        "nat_division"
    }

    fn phase(&self) -> Phase {
        Phase::Token
    }

    fn description(&self) -> &'static str {
        "literal fraction exponent such as `^(1/3)` truncates to 0 in ℕ; cast the numerator to ℝ"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        let mut out = Vec::new();
        for region in &ctx.regions {
            let range = ctx.token_range(*region);
            let toks = &ctx.tokens[range.clone()];
            for w in 0..toks.len().saturating_sub(5) {
                let i = range.start + w;
                let shape =
                    [ctx.token_text(i), ctx.token_text(i + 1), "", ctx.token_text(i + 3), "", ctx.token_text(i + 5)];
                if shape != ["^", "(", "", "/", "", ")"]
                    || ctx.tokens[i + 2].kind != TokenKind::Number
                    || ctx.tokens[i + 4].kind != TokenKind::Number
                {
                    continue;
                }
                let numerator = ctx.tokens[i + 2];
                let n = ctx.token_text(i + 2);
                out.push(finding(self.id(), numerator.span, fixable_if(ctx.real_context()), format!("({n}:ℝ)")));
            }
        }
        out
    }
}

const RELATIONS: &[&str] = &["<", ">", "≤", "≥", "<=", ">=", "=", "≠"];

const BOUNDARIES: &[&str] = &[
    "∧", "∨", "¬", "→", "->", "↔", "<->", ",", ":=", "=>", ";", ":", "∀", "∃", "∃!", "λ", "fun", "if", "then", "else",
    "∑", "∏", "<|", "|>", "$",
];

pub struct ChainedInequality;

impl LintRule for ChainedInequality {
    fn id(&self) -> &'static str {
        "chained_inequality"
    }

    fn phase(&self) -> Phase {
        Phase::Structural
    }

    fn description(&self) -> &'static str {
        "chained relation such as `a >= b >= c`; split into a conjunction"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        let mut out = Vec::new();
        for region in &ctx.regions {
            let range = ctx.token_range(*region);
            self.scan(ctx, range.start, range.end, false, &mut out);
        }
        out
    }
}

impl ChainedInequality {
    /// Splits `lo..hi` into segments at boundary tokens of this nesting
    /// level, recursing into bracket groups. Inside `{ }` the first `|`
    /// separates a set-builder binder from its predicate.
    fn scan(&self, ctx: &LintContext<'_>, lo: usize, hi: usize, in_braces: bool, out: &mut Vec<Finding>) {
        let mut seg_start = lo;
        let mut builder_bar = in_braces;
        let mut relations = Vec::new();
        let mut i = lo;
        while i < hi {
            let t = ctx.tokens[i];
            let text = ctx.token_text(i);
            if t.kind == TokenKind::Open {
                let close = ctx.matching[i].unwrap_or(hi - 1).min(hi - 1);
                self.scan(ctx, i + 1, close, text == "{", out);
                i = close + 1;
                continue;
            }
            let bar = builder_bar && text == "|";
            if bar {
                builder_bar = false;
            }
            if bar || (BOUNDARIES.contains(&text) && t.kind != TokenKind::Str) {
                self.emit(ctx, seg_start, i, &relations, out);
                relations.clear();
                seg_start = i + 1;
            } else if RELATIONS.contains(&text) {
                relations.push(i);
            }
            i += 1;
        }
        self.emit(ctx, seg_start, hi, &relations, out);
    }

    fn emit(&self, ctx: &LintContext<'_>, lo: usize, hi: usize, relations: &[usize], out: &mut Vec<Finding>) {
        if relations.len() < 2 || lo >= hi {
            return;
        }
        // operand k spans the tokens between relation k-1 and relation k
        let mut cuts = vec![lo];
        for &r in relations {
            cuts.push(r);
            cuts.push(r + 1);
        }
        cuts.push(hi);
        let mut operands = Vec::new();
        for pair in cuts.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            if a >= b {
                return;
            }
            let span = Span::new(ctx.tokens[a].span.start, ctx.tokens[b - 1].span.end);
            operands.push(ctx.rewritten(span));
        }
        let conj: Vec<String> = relations
            .iter()
            .enumerate()
            .map(|(k, &r)| format!("{} {} {}", operands[k], ctx.token_text(r), operands[k + 1]))
            .collect();
        let mut suggestion = conj.join(" ∧ ");
        if lo > 0 && ctx.token_text(lo - 1) == "¬" {
            suggestion = format!("({suggestion})");
        }
        let span = Span::new(ctx.tokens[lo].span.start, ctx.tokens[hi - 1].span.end);
        out.push(finding(self.id(), span, FindingSeverity::Fixable, suggestion));
    }
}
