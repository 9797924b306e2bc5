//! Theorem-header parser.
//!
//! Splits a single `theorem`/`lemma` declaration into name, binder groups,
//! goal and terminator. Binder and goal bodies are kept as verbatim source
//! slices; only bracket structure and the top-level `:` / `:=` are parsed.

use forge_core::Span;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::token::{closer_for, significant, tokenize, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclKeyword {
    Theorem,
    Lemma,
}

impl DeclKeyword {
    pub fn as_str(self) -> &'static str {
        match self {
            DeclKeyword::Theorem => "theorem",
            DeclKeyword::Lemma => "lemma",
        }
    }

    fn from_text(s: &str) -> Option<Self> {
        match s {
            "theorem" => Some(DeclKeyword::Theorem),
            "lemma" => Some(DeclKeyword::Lemma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinderKind {
    /// `( )`
    Explicit,
    /// `{ }` and `⦃ ⦄`
    Implicit,
    /// `[ ]`
    Instance,
}

impl BinderKind {
    fn from_open(open: &str) -> Option<Self> {
        match open {
            "(" => Some(BinderKind::Explicit),
            "{" | "⦃" => Some(BinderKind::Implicit),
            "[" => Some(BinderKind::Instance),
            _ => None,
        }
    }

    pub fn brackets(self) -> (&'static str, &'static str) {
        match self {
            BinderKind::Explicit => ("(", ")"),
            BinderKind::Implicit => ("{", "}"),
            BinderKind::Instance => ("[", "]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binder {
    pub names: Vec<String>,
    pub type_text: String,
    pub kind: BinderKind,
}

impl Binder {
    /// Whether the binder type looks like a proposition rather than a type,
    /// i.e. whether this binder is a hypothesis.
    pub fn is_hypothesis(&self) -> bool {
        self.kind != BinderKind::Instance && !self.names.is_empty() && looks_like_prop(&self.type_text)
    }

    pub fn render(&self) -> String {
        let (open, close) = self.kind.brackets();
        let mut s = String::from(open);
        s.push_str(&self.names.join(" "));
        if !self.type_text.is_empty() {
            if !self.names.is_empty() {
                s.push_str(" : ");
            }
            s.push_str(&self.type_text);
            if ends_in_line_comment(&self.type_text) {
                s.push('\n');
            }
        }
        s.push_str(close);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "snake_case")]
pub enum Terminator {
    /// `:= by sorry` (`tactic = true`) or `:= sorry`.
    Sorry {
        tactic: bool,
    },
    ProofBody(String),
    Missing,
}

impl Terminator {
    pub fn render(&self) -> Option<String> {
        match self {
            Terminator::Sorry { tactic: true } => Some(":= by sorry".into()),
            Terminator::Sorry { tactic: false } => Some(":= sorry".into()),
            Terminator::ProofBody(body) => Some(format!(":= {body}")),
            Terminator::Missing => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTheorem {
    /// Doc comments and attributes preceding the keyword, verbatim.
    pub preamble: Option<String>,
    pub keyword: DeclKeyword,
    pub name: String,
    pub binders: Vec<Binder>,
    pub goal_text: String,
    pub terminator: Terminator,
}

impl ParsedTheorem {
    pub fn hypotheses(&self) -> impl Iterator<Item = &Binder> {
        self.binders.iter().filter(|b| b.is_hypothesis())
    }

    /// Renders the declaration back to source. Parsing the result yields an
    /// equal value.
    pub fn to_source(&self) -> String {
        let mut s = String::new();
        if let Some(pre) = &self.preamble {
            s.push_str(pre);
            s.push('\n');
        }
        s.push_str(self.keyword.as_str());
        s.push(' ');
        s.push_str(&self.name);
        for b in &self.binders {
            s.push(' ');
            s.push_str(&b.render());
        }
        s.push_str(" : ");
        s.push_str(&self.goal_text);
        if let Some(term) = self.terminator.render() {
            s.push(if ends_in_line_comment(&self.goal_text) { '\n' } else { ' ' });
            s.push_str(&term);
        }
        s
    }
}

/// Byte ranges of the parsed pieces within the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub keyword: Span,
    pub name: Span,
    /// Whole groups, brackets included.
    pub binder_groups: Vec<Span>,
    /// Type portion of each group (empty span when the group has no type).
    pub binder_types: Vec<Span>,
    pub goal: Span,
    /// From `:=` to the end, when present.
    pub terminator: Option<Span>,
}

impl Layout {
    /// Regions that hold expressions: binder types and the goal.
    pub fn expression_regions(&self) -> impl Iterator<Item = Span> + '_ {
        self.binder_types.iter().copied().filter(|s| !s.is_empty()).chain(std::iter::once(self.goal))
    }
}

pub fn parse_statement(text: &str) -> Result<ParsedTheorem, ParseError> {
    parse_with_layout(text).map(|(t, _)| t)
}

pub fn parse_with_layout(src: &str) -> Result<(ParsedTheorem, Layout), ParseError> {
    let all = tokenize(src)?;
    let toks = significant(&all);
    let matching = match_brackets(src, &toks)?;

    let kw_idx = find_keyword(src, &toks, &matching)?;
    let keyword = DeclKeyword::from_text(toks[kw_idx].text(src)).expect("found by keyword search");
    let preamble = Some(src[..toks[kw_idx].span.start].trim()).filter(|p| !p.is_empty()).map(String::from);

    let name_tok = toks
        .get(kw_idx + 1)
        .filter(|t| t.kind == TokenKind::Ident)
        .ok_or_else(|| ParseError::at(src, toks[kw_idx].span.end, "expected theorem name after keyword"))?;
    let name = name_tok.text(src).to_string();

    let mut binders = Vec::new();
    let mut binder_groups = Vec::new();
    let mut binder_types = Vec::new();
    let mut i = kw_idx + 2;
    let colon_idx = loop {
        let Some(t) = toks.get(i) else {
            return Err(ParseError::at(src, src.len(), "expected ':' before the goal"));
        };
        let text = t.text(src);
        if text == ":" {
            break i;
        }
        let kind = (t.kind == TokenKind::Open)
            .then(|| BinderKind::from_open(text))
            .flatten()
            .ok_or_else(|| ParseError::at(src, t.span.start, format!("unexpected {text:?} in binder list")))?;
        let close = matching[i].expect("open brackets are matched");
        let (binder, type_span) = parse_binder(src, &toks, i, close, kind);
        binders.push(binder);
        binder_groups.push(Span::new(t.span.start, toks[close].span.end));
        binder_types.push(type_span);
        i = close + 1;
    };

    // goal runs to the first `:=` outside brackets
    let mut depth = 0usize;
    let mut assign_idx = None;
    for (j, t) in toks.iter().enumerate().skip(colon_idx + 1) {
        match t.kind {
            TokenKind::Open => depth += 1,
            TokenKind::Close => depth -= 1,
            TokenKind::Symbol if depth == 0 && t.text(src) == ":=" => {
                assign_idx = Some(j);
                break;
            }
            _ => {}
        }
    }
    let goal_end_tok = assign_idx.unwrap_or(toks.len());
    if goal_end_tok == colon_idx + 1 {
        return Err(ParseError::at(src, toks[colon_idx].span.end, "empty goal"));
    }
    let goal_span = Span::new(toks[colon_idx + 1].span.start, toks[goal_end_tok - 1].span.end);
    let goal_text = src[goal_span.start..goal_span.end].to_string();

    let (terminator, term_span) = match assign_idx {
        None => (Terminator::Missing, None),
        Some(a) => {
            let rest = &toks[a + 1..];
            let words: Vec<&str> = rest.iter().map(|t| t.text(src)).collect();
            let span = Span::new(toks[a].span.start, toks.last().expect("non-empty").span.end);
            let term = match words.as_slice() {
                ["by", "sorry"] => Terminator::Sorry { tactic: true },
                ["sorry"] => Terminator::Sorry { tactic: false },
                [] => return Err(ParseError::at(src, toks[a].span.end, "missing proof after ':='")),
                _ => {
                    Terminator::ProofBody(src[rest[0].span.start..rest.last().expect("non-empty").span.end].to_string())
                }
            };
            (term, Some(span))
        }
    };

    let layout = Layout {
        keyword: toks[kw_idx].span,
        name: name_tok.span,
        binder_groups,
        binder_types,
        goal: goal_span,
        terminator: term_span,
    };
    let theorem = ParsedTheorem { preamble, keyword, name, binders, goal_text, terminator };
    Ok((theorem, layout))
}

/// Pairs every bracket, failing on the first mismatch.
pub(crate) fn match_brackets(src: &str, toks: &[Token]) -> Result<Vec<Option<usize>>, ParseError> {
    let mut matching = vec![None; toks.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        match t.kind {
            TokenKind::Open => stack.push(i),
            TokenKind::Close => {
                let Some(open) = stack.pop() else {
                    return Err(ParseError::at(
                        src,
                        t.span.start,
                        format!("unbalanced {:?} with no matching opener", t.text(src)),
                    ));
                };
                let expected = closer_for(toks[open].text(src)).expect("opener");
                if expected != t.text(src) {
                    return Err(ParseError::at(
                        src,
                        t.span.start,
                        format!("expected {expected:?} to close {:?}, found {:?}", toks[open].text(src), t.text(src)),
                    ));
                }
                matching[open] = Some(i);
                matching[i] = Some(open);
            }
            _ => {}
        }
    }
    if let Some(open) = stack.pop() {
        return Err(ParseError::at(src, toks[open].span.start, format!("unclosed {:?}", toks[open].text(src))));
    }
    Ok(matching)
}

/// Locates the single declaration keyword. Only attributes and modifiers may
/// precede it; a second top-level declaration is an error.
fn find_keyword(src: &str, toks: &[Token], matching: &[Option<usize>]) -> Result<usize, ParseError> {
    const MODIFIERS: &[&str] = &["private", "protected", "noncomputable", "nonrec"];
    let mut i = 0;
    let kw = loop {
        let Some(t) = toks.get(i) else {
            return Err(ParseError::at(src, src.len(), "no theorem or lemma declaration found"));
        };
        let text = t.text(src);
        if DeclKeyword::from_text(text).is_some() {
            break i;
        }
        if text == "@" && toks.get(i + 1).is_some_and(|n| n.text(src) == "[") {
            i = matching[i + 1].expect("matched") + 1;
            continue;
        }
        if MODIFIERS.contains(&text) {
            i += 1;
            continue;
        }
        return Err(ParseError::at(src, t.span.start, format!("expected theorem or lemma, found {text:?}")));
    };
    let mut depth = 0usize;
    for t in &toks[kw + 1..] {
        match t.kind {
            TokenKind::Open => depth += 1,
            TokenKind::Close => depth -= 1,
            TokenKind::Ident if depth == 0 => {
                let text = t.text(src);
                if matches!(text, "theorem" | "lemma" | "example" | "def" | "instance" | "abbrev") {
                    return Err(ParseError::at(src, t.span.start, format!("multiple declarations: second {text:?}")));
                }
            }
            _ => {}
        }
    }
    Ok(kw)
}

fn parse_binder(src: &str, toks: &[Token], open: usize, close: usize, kind: BinderKind) -> (Binder, Span) {
    let inner = &toks[open + 1..close];
    let mut depth = 0usize;
    let colon = inner.iter().position(|t| {
        match t.kind {
            TokenKind::Open => depth += 1,
            TokenKind::Close => depth -= 1,
            _ => {}
        }
        depth == 0 && t.text(src) == ":"
    });
    let body_start = |idx: usize| inner.get(idx).map(|t| t.span.start);
    match colon {
        Some(c) => {
            let names = inner[..c].iter().map(|t| t.text(src).to_string()).collect();
            let span = match body_start(c + 1) {
                Some(start) => Span::new(start, inner[inner.len() - 1].span.end),
                None => Span::new(toks[close].span.start, toks[close].span.start),
            };
            let type_text = src[span.start..span.end].to_string();
            (Binder { names, type_text, kind }, span)
        }
        None if kind == BinderKind::Instance => {
            let span = match inner.first() {
                Some(first) => Span::new(first.span.start, inner[inner.len() - 1].span.end),
                None => Span::new(toks[close].span.start, toks[close].span.start),
            };
            (Binder { names: vec![], type_text: src[span.start..span.end].to_string(), kind }, span)
        }
        None => {
            let names = inner.iter().map(|t| t.text(src).to_string()).collect();
            let at = toks[close].span.start;
            (Binder { names, type_text: String::new(), kind }, Span::new(at, at))
        }
    }
}

fn ends_in_line_comment(text: &str) -> bool {
    tokenize(text)
        .ok()
        .and_then(|toks| toks.into_iter().rev().find(|t| t.kind != TokenKind::Whitespace))
        .is_some_and(|t| t.kind == TokenKind::LineComment)
}

const RELATION_TOKENS: &[&str] = &[
    "=", "≠", "<", ">", "≤", "≥", "<=", ">=", "!=", "∣", "∧", "∨", "¬", "↔", "∈", "∉", "⊆", "⊂", "⊇", "⊃", "∀", "∃",
    "∃!", "≡", "True", "False",
];

const TYPE_HEADS: &[&str] = &[
    "Set",
    "Finset",
    "Fin",
    "List",
    "Multiset",
    "Array",
    "Polynomial",
    "Matrix",
    "Type",
    "Sort",
    "Prop",
    "Option",
    "ZMod",
    "EuclideanSpace",
    "Filter",
];

/// Heuristic: relations, connectives and quantifiers make a proposition;
/// an applied capitalized head that is not a known type former is taken as
/// a predicate (`Nat.Prime p`, `IsCompact D`).
fn looks_like_prop(type_text: &str) -> bool {
    let Ok(toks) = tokenize(type_text) else { return false };
    let toks = significant(&toks);
    let mut depth = 0usize;
    for t in &toks {
        match t.kind {
            TokenKind::Open => depth += 1,
            TokenKind::Close => depth = depth.saturating_sub(1),
            _ if depth == 0 && RELATION_TOKENS.contains(&t.text(type_text)) => return true,
            _ => {}
        }
    }
    let Some(head) = toks.first().filter(|t| t.kind == TokenKind::Ident) else { return false };
    let head = head.text(type_text);
    let last = head.rsplit('.').next().unwrap_or(head);
    let applied = toks.len() > 1 && !toks.iter().any(|t| matches!(t.text(type_text), "→" | "->"));
    applied && last.chars().next().is_some_and(char::is_uppercase) && !TYPE_HEADS.contains(&last)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EX_1: &str = "theorem ex_1 (n p : ℕ) (hp: Nat.Prime p) (h₁ : p ∣ n) : { (x, y) : ℕ × ℕ | x + y = n ∧ Nat.gcd x y = p }.Finite := by sorry";

    #[test]
    fn section_two_example() {
        let t = parse_statement(EX_1).unwrap();
        assert_eq!(t.name, "ex_1");
        assert_eq!(t.binders.len(), 3);
        assert_eq!(t.binders[0].names, vec!["n", "p"]);
        assert_eq!(t.binders[0].type_text, "ℕ");
        assert_eq!(t.binders[1].names, vec!["hp"]);
        assert_eq!(t.binders[1].type_text, "Nat.Prime p");
        assert_eq!(t.goal_text, "{ (x, y) : ℕ × ℕ | x + y = n ∧ Nat.gcd x y = p }.Finite");
        assert_eq!(t.terminator, Terminator::Sorry { tactic: true });
        let hyps: Vec<_> = t.hypotheses().map(|b| b.names[0].as_str()).collect();
        assert_eq!(hyps, vec!["hp", "h₁"]);
    }

    #[test]
    fn minimal() {
        let t = parse_statement("theorem t : True := by sorry").unwrap();
        assert!(t.binders.is_empty());
        assert_eq!(t.goal_text, "True");
    }

    #[test]
    fn imo_1983_p5_with_doc_comment() {
        let src = "/--\nIMO 1983 P5\n--/\n\ntheorem IMO1983_P5 :\n    ∃ S : Finset ℕ, S.card = 1983 ∧ (∀ x ∈ S, x ≤ 10^5) ∧\n    ∀ x ∈ S, ∀ y ∈ S, ∀ z ∈ S, x < y ∧ y < z → x + z ≠ 2 * y := by sorry";
        let t = parse_statement(src).unwrap();
        assert_eq!(t.name, "IMO1983_P5");
        assert!(t.goal_text.starts_with("∃ S : Finset ℕ"));
        assert_eq!(t.preamble.as_deref(), Some("/--\nIMO 1983 P5\n--/"));
    }

    #[test]
    fn terminators() {
        let t = parse_statement("lemma l (x : ℕ) : x = x := sorry").unwrap();
        assert_eq!(t.keyword, DeclKeyword::Lemma);
        assert_eq!(t.terminator, Terminator::Sorry { tactic: false });
        let t = parse_statement("theorem l : 1 + 1 = 2 := by norm_num").unwrap();
        assert_eq!(t.terminator, Terminator::ProofBody("by norm_num".into()));
        let t = parse_statement("theorem l (m n : ℕ) : (1978^m) ").unwrap();
        assert_eq!(t.terminator, Terminator::Missing);
    }

    #[test]
    fn binder_kinds() {
        let t = parse_statement("theorem s {M : Set ℂ} [Fintype α] (x y) ⦃z : ℕ⦄ : M = M := by sorry").unwrap();
        let kinds: Vec<_> = t.binders.iter().map(|b| b.kind).collect();
        assert_eq!(kinds, vec![BinderKind::Implicit, BinderKind::Instance, BinderKind::Explicit, BinderKind::Implicit]);
        assert!(t.binders[1].names.is_empty());
        assert_eq!(t.binders[1].type_text, "Fintype α");
        assert_eq!(t.binders[2].names, vec!["x", "y"]);
        assert_eq!(t.binders[2].type_text, "");
        assert_eq!(t.hypotheses().count(), 0);
    }

    #[test]
    fn no_space_before_goal_colon() {
        let t = parse_statement("theorem FE (f : ℝ → ℝ):(∀ x y, f (x * f x + f y) = (f x)^2 + y) ↔ ∀ x, f x = x ∨ ∀ x, f x = -x := by sorry").unwrap();
        assert_eq!(t.binders.len(), 1);
        assert!(!t.binders[0].is_hypothesis());
        assert!(t.goal_text.starts_with("(∀ x y"));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_statement("theorem t (x : ℕ : x = 1 := by sorry").unwrap_err();
        assert_eq!((e.line, e.column), (1, 11));
        let e = parse_statement("theorem t (x : ℕ]) : x = 1 := by sorry").unwrap_err();
        assert!(e.message.contains("expected \")\""), "{e}");
        let e = parse_statement("theorem a : True := by sorry\ntheorem b : True := by sorry").unwrap_err();
        assert!(e.message.contains("multiple declarations"));
        assert_eq!(e.line, 2);
        assert!(parse_statement("def x := 1").is_err());
        assert!(parse_statement("theorem : True := by sorry").is_err());
    }

    #[test]
    fn serialize_round_trip() {
        for src in [
            EX_1,
            "theorem t : True := by sorry",
            "/-- doc -/\n@[simp] theorem s {M : Set ℂ} [Fintype α] (x y) : M = M := sorry",
            "theorem c (a : ℕ) : a = a -- trailing\n := by rfl",
        ] {
            let t = parse_statement(src).unwrap();
            assert_eq!(parse_statement(&t.to_source()).unwrap(), t, "{src}");
        }
    }

    #[test]
    fn prop_heuristic() {
        for p in ["0 < a", "Nat.Prime p", "IsCompact D", "ContinuousOn f D", "a > 0 ∧ b > 0", "∀ n, a (n + 1) = a n"]
        {
            assert!(looks_like_prop(p), "{p}");
        }
        for ty in ["ℕ", "ℝ → ℝ", "Set ℂ", "Finset ℕ", "Fin n → Fin 6", "ℕ → ℤ"] {
            assert!(!looks_like_prop(ty), "{ty}");
        }
    }
}
