//! Rules that compare the statement against the problem text. They flag and
//! never rewrite: deciding the right formalization needs judgment.
//!
//! Detection is phrase-based on the problem text plus a token scan of the
//! statement for the construct that would express the phrase.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use forge_core::{Finding, FindingSeverity, Span};
use regex::Regex;

use super::{LintContext, LintRule, Phase};
use crate::token::TokenKind;

fn flag(rule_id: &str, span: Span, suggestion: Option<String>) -> Finding {
    Finding { rule_id: rule_id.into(), span, severity: FindingSeverity::Flag, suggestion }
}

fn re(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static pattern")
}

fn nl_matches(ctx: &LintContext<'_>, pattern: &Regex) -> bool {
    ctx.nl_text.is_some_and(|nl| pattern.is_match(&nl.to_lowercase()))
}

/// Token indices inside expression regions; the theorem name is excluded.
fn expression_tokens<'a>(ctx: &'a LintContext<'_>) -> impl Iterator<Item = usize> + 'a {
    ctx.regions.iter().flat_map(|r| ctx.token_range(*r))
}

/// Last dotted component of each identifier in an expression.
fn ident_tails<'a>(ctx: &'a LintContext<'_>) -> impl Iterator<Item = &'a str> + 'a {
    expression_tokens(ctx)
        .filter(|&i| ctx.tokens[i].kind == TokenKind::Ident)
        .map(|i| ctx.token_text(i).rsplit('.').next().unwrap_or(""))
}

fn has_token(ctx: &LintContext<'_>, texts: &[&str]) -> bool {
    expression_tokens(ctx).any(|i| texts.contains(&ctx.token_text(i)))
}

fn goal_has_token(ctx: &LintContext<'_>, texts: &[&str]) -> bool {
    ctx.token_range(ctx.goal).any(|i| texts.contains(&ctx.token_text(i)))
}

pub struct TriangleCondition;

static TRIANGLE: LazyLock<Regex> = LazyLock::new(|| re(r"\bsides?\b.*\btriangle\b|\btriangle\b.*\bsides?\b"));

impl LintRule for TriangleCondition {
    fn id(&self) -> &'static str {
        "triangle_condition"
    }

    fn phase(&self) -> Phase {
        Phase::Semantic
    }

    fn description(&self) -> &'static str {
        "problem speaks of triangle side lengths but the three triangle inequalities are not all stated"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        if !nl_matches(ctx, &TRIANGLE) || triangle_inequalities(ctx) >= 3 {
            return vec![];
        }
        let hint = "(hab : a + b > c) (hbc : b + c > a) (hca : a + c > b)".to_string();
        vec![flag(self.id(), ctx.goal, Some(hint))]
    }
}

/// Counts distinct `x + y > z` / `z < x + y` shapes over plain identifiers.
fn triangle_inequalities(ctx: &LintContext<'_>) -> usize {
    let n = ctx.tokens.len();
    let is_ident = |i: usize| ctx.tokens[i].kind == TokenKind::Ident;
    let mut seen = BTreeSet::new();
    for i in 0..n.saturating_sub(4) {
        let t: Vec<&str> = (i..i + 5).map(|k| ctx.token_text(k)).collect();
        let idents = [0, 2, 4].iter().all(|&k| is_ident(i + k));
        if !idents {
            continue;
        }
        let (sum, other) = if t[1] == "+" && matches!(t[3], ">" | "≥" | ">=") {
            ((t[0], t[2]), t[4])
        } else if t[3] == "+" && matches!(t[1], "<" | "≤" | "<=") {
            ((t[2], t[4]), t[0])
        } else {
            continue;
        };
        let pair = if sum.0 <= sum.1 { sum } else { (sum.1, sum.0) };
        seen.insert((pair, other));
    }
    seen.len()
}

pub struct MissingExtremumWitness;

static MAXIMUM: LazyLock<Regex> = LazyLock::new(|| re(r"\b(maxim(um|al|ize|ise)|greatest|largest|biggest)\b"));
static MINIMUM: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(minim(um|al|ize|ise)|smallest|least (possible )?value|the least)\b"));

const WITNESS_MARKERS: &[&str] = &[
    "IsGreatest",
    "IsLeast",
    "IsLUB",
    "IsGLB",
    "sSup",
    "sInf",
    "iSup",
    "iInf",
    "IsMaxOn",
    "IsMinOn",
    "Maximal",
    "Minimal",
    "max'",
    "min'",
    "sup'",
    "inf'",
];

impl LintRule for MissingExtremumWitness {
    fn id(&self) -> &'static str {
        "missing_extremum_witness"
    }

    fn phase(&self) -> Phase {
        Phase::Semantic
    }

    fn description(&self) -> &'static str {
        "extremum problem stated as a one-sided bound without attainment; use IsGreatest/IsLeast"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        let Some(nl) = ctx.nl_text else { return vec![] };
        let lowered = nl.to_lowercase().replace("greatest common divisor", "").replace("least common multiple", "");
        let wants_max = MAXIMUM.is_match(&lowered);
        let wants_min = MINIMUM.is_match(&lowered);
        if !(wants_max || wants_min) {
            return vec![];
        }
        let witnessed =
            ident_tails(ctx).any(|t| WITNESS_MARKERS.contains(&t)) || has_token(ctx, &["⨆", "⨅", "∃", "∃!"]);
        if witnessed || !goal_has_token(ctx, &["≤", "≥", "<", ">", "<=", ">="]) {
            return vec![];
        }
        let hint = if wants_max { "IsGreatest {x | ...} v" } else { "IsLeast {x | ...} v" };
        vec![flag(self.id(), ctx.goal, Some(hint.into()))]
    }
}

pub struct Infinitude;

static INFINITE: LazyLock<Regex> = LazyLock::new(|| re(r"\binfinite(ly)?\b"));

impl LintRule for Infinitude {
    fn id(&self) -> &'static str {
        "infinitude"
    }

    fn phase(&self) -> Phase {
        Phase::Semantic
    }

    fn description(&self) -> &'static str {
        "problem claims infinitely many objects but the statement has no unbounded-existence form"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        if !nl_matches(ctx, &INFINITE) {
            return vec![];
        }
        let expressed = ident_tails(ctx).any(|t| t.contains("Infinite") || t.contains("infinite") || t == "Finite")
            || (goal_has_token(ctx, &["∀"]) && goal_has_token(ctx, &["∃"]));
        if expressed {
            return vec![];
        }
        vec![flag(self.id(), ctx.goal, Some("∀ N : ℕ, ∃ n > N, ...".into()))]
    }
}

pub struct Digits;

static DIGITS: LazyLock<Regex> = LazyLock::new(|| re(r"\bdigits?\b"));

impl LintRule for Digits {
    fn id(&self) -> &'static str {
        "digits"
    }

    fn phase(&self) -> Phase {
        Phase::Semantic
    }

    fn description(&self) -> &'static str {
        "problem is about decimal digits but the statement does not use Nat.digits"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        if !nl_matches(ctx, &DIGITS) || ident_tails(ctx).any(|t| t.to_lowercase().contains("digits")) {
            return vec![];
        }
        vec![flag(self.id(), ctx.goal, Some("(Nat.digits 10 n).sum".into()))]
    }
}

pub struct SolutionCount;

static COUNT: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\bhow many\b|\bnumber of (\w+ )?(solutions|pairs|triples|tuples|integers|ways|roots|values|elements)\b|\b(sum|product) of all\b",
    )
});

impl LintRule for SolutionCount {
    fn id(&self) -> &'static str {
        "solution_count"
    }

    fn phase(&self) -> Phase {
        Phase::Semantic
    }

    fn description(&self) -> &'static str {
        "counting or summing problem without a Finset cardinality or sum in the statement"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        if !nl_matches(ctx, &COUNT) {
            return vec![];
        }
        let counted = ident_tails(ctx).any(|t| t.contains("card") || t == "count" || t == "sum" || t == "prod")
            || has_token(ctx, &["∑", "∏"]);
        if counted {
            return vec![];
        }
        vec![flag(self.id(), ctx.goal, Some("A : Finset _ := {x | ...}, A.card = k".into()))]
    }
}

pub struct AllSolutions;

impl LintRule for AllSolutions {
    fn id(&self) -> &'static str {
        "all_solutions"
    }

    fn phase(&self) -> Phase {
        Phase::Semantic
    }

    fn description(&self) -> &'static str {
        "solution set written as a tuple list `(x,y)=(1,5),(2,3)`; state a disjunction of equalities"
    }

    fn check(&self, ctx: &LintContext<'_>) -> Vec<Finding> {
        ctx.regions
            .iter()
            .flat_map(|r| tuple_enumerations(ctx, *r))
            .map(|(span, hint)| flag(self.id(), span, hint))
            .collect()
    }
}

/// Finds `(x, y) = (1, 5), (2, 3)` and proposes the disjunction of
/// componentwise equalities when arities agree.
fn tuple_enumerations(ctx: &LintContext<'_>, region: Span) -> Vec<(Span, Option<String>)> {
    let range = ctx.token_range(region);
    let mut out = Vec::new();
    for eq in range.clone() {
        if ctx.token_text(eq) != "=" || eq == range.start || eq + 1 >= range.end {
            continue;
        }
        let lhs_close = eq - 1;
        if ctx.token_text(lhs_close) != ")" {
            continue;
        }
        let Some(lhs_open) = ctx.matching[lhs_close] else { continue };
        let mut tuples = Vec::new();
        let mut j = eq + 1;
        while j < range.end && ctx.token_text(j) == "(" {
            let Some(close) = ctx.matching[j] else { break };
            tuples.push((j, close));
            if close + 2 < range.end && ctx.token_text(close + 1) == "," && ctx.token_text(close + 2) == "(" {
                j = close + 2;
            } else {
                break;
            }
        }
        if tuples.len() < 2 {
            continue;
        }
        let last = tuples[tuples.len() - 1].1;
        let span = Span::new(ctx.tokens[lhs_open].span.start, ctx.tokens[last].span.end);
        let vars = components(ctx, lhs_open, lhs_close);
        let hint = tuples
            .iter()
            .map(|&(o, c)| components(ctx, o, c))
            .map(|vals| {
                (vals.len() == vars.len()).then(|| {
                    let eqs: Vec<String> = vars.iter().zip(&vals).map(|(v, x)| format!("{v} = {x}")).collect();
                    format!("({})", eqs.join(" ∧ "))
                })
            })
            .collect::<Option<Vec<_>>>()
            .map(|d| d.join(" ∨ "));
        out.push((span, hint));
    }
    out
}

/// Top-level comma-separated pieces between a bracket pair.
fn components(ctx: &LintContext<'_>, open: usize, close: usize) -> Vec<String> {
    let mut parts = Vec::new();
    let mut start = open + 1;
    let mut i = open + 1;
    while i <= close {
        if i == close || ctx.token_text(i) == "," {
            if start < i {
                parts.push(ctx.slice(Span::new(ctx.tokens[start].span.start, ctx.tokens[i - 1].span.end)).to_string());
            }
            start = i + 1;
            i += 1;
            continue;
        }
        if ctx.tokens[i].kind == TokenKind::Open {
            i = ctx.matching[i].unwrap_or(close);
        }
        i += 1;
    }
    parts
}
