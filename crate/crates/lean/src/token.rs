//! Lexer for the subset of Lean 4 surface syntax that appears in theorem
//! headers.

use forge_core::Span;

use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Open,
    Close,
    Symbol,
    Whitespace,
    LineComment,
    BlockComment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.start..self.span.end]
    }

    pub fn is_trivia(&self) -> bool {
        matches!(self.kind, TokenKind::Whitespace | TokenKind::LineComment | TokenKind::BlockComment)
    }

    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::LineComment | TokenKind::BlockComment)
    }
}

const OPENERS: &[(char, char)] = &[('(', ')'), ('[', ']'), ('{', '}'), ('⦃', '⦄'), ('⟨', '⟩'), ('⟦', '⟧')];

pub fn closer_for(open: &str) -> Option<&'static str> {
    match open {
        "(" => Some(")"),
        "[" => Some("]"),
        "{" => Some("}"),
        "⦃" => Some("⦄"),
        "⟨" => Some("⟩"),
        "⟦" => Some("⟧"),
        _ => None,
    }
}

// Longest match first.
const MULTI_SYMBOLS: &[&str] = &[
    "<;>", "<->", "...", "<|>", ":=", "=>", "->", "<-", "<=", ">=", "!=", "==", "&&", "||", "<|", "|>", "::", "..",
    "++", "^^", "∃!",
];

/// Double-struck number sets are notation, not identifiers.
const NUMBER_SETS: &[char] = &['ℕ', 'ℤ', 'ℚ', 'ℝ', 'ℂ'];

fn is_ident_start(c: char) -> bool {
    if NUMBER_SETS.contains(&c) || matches!(c, 'λ' | 'Π' | 'Σ') {
        return false;
    }
    c == '_' || c.is_alphabetic()
}

fn is_subscript(c: char) -> bool {
    matches!(c, '₀'..='₉' | 'ₐ'..='ₜ' | 'ᵢ'..='ᵪ' | 'ⱼ')
}

fn is_ident_rest(c: char) -> bool {
    is_ident_start(c) || c.is_ascii_digit() || matches!(c, '\'' | '!' | '?') || is_subscript(c)
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().expect("non-empty rest");
        let start = i;
        let kind;
        if c.is_whitespace() {
            let len = rest.find(|ch: char| !ch.is_whitespace()).unwrap_or(rest.len());
            i += len;
            kind = TokenKind::Whitespace;
        } else if rest.starts_with("--") {
            i += rest.find('\n').unwrap_or(rest.len());
            kind = TokenKind::LineComment;
        } else if rest.starts_with("/-") {
            i += block_comment_len(rest).ok_or_else(|| ParseError::at(src, start, "unterminated block comment"))?;
            kind = TokenKind::BlockComment;
        } else if c == '"' {
            i += string_len(rest).ok_or_else(|| ParseError::at(src, start, "unterminated string literal"))?;
            kind = TokenKind::Str;
        } else if c.is_ascii_digit() {
            i += number_len(rest);
            kind = TokenKind::Number;
        } else if c == '«' {
            let end = rest.find('»').ok_or_else(|| ParseError::at(src, start, "unterminated «identifier»"))?;
            i += end + '»'.len_utf8();
            i += ident_tail_len(&src[i..]);
            kind = TokenKind::Ident;
        } else if is_ident_start(c) {
            i += c.len_utf8();
            i += ident_tail_len(&src[i..]);
            kind = TokenKind::Ident;
        } else if OPENERS.iter().any(|(o, _)| *o == c) {
            i += c.len_utf8();
            kind = TokenKind::Open;
        } else if OPENERS.iter().any(|(_, cl)| *cl == c) {
            i += c.len_utf8();
            kind = TokenKind::Close;
        } else if let Some(sym) = MULTI_SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            i += sym.len();
            kind = TokenKind::Symbol;
        } else {
            i += c.len_utf8();
            kind = TokenKind::Symbol;
        }
        debug_assert!(i > start && src.is_char_boundary(i));
        tokens.push(Token { kind, span: Span::new(start, i) });
    }
    Ok(tokens)
}

/// Identifier continuation, including `.`-separated components
/// (`Nat.Prime`, `S.card`) but not numeric projections (`x.1`).
fn ident_tail_len(s: &str) -> usize {
    let mut len = 0;
    let mut chars = s.char_indices().peekable();
    while let Some((idx, c)) = chars.next() {
        if is_ident_rest(c) {
            len = idx + c.len_utf8();
        } else if c == '.' {
            match chars.peek() {
                Some(&(_, next)) if is_ident_start(next) || next == '«' => {
                    len = idx + 1;
                }
                _ => break,
            }
        } else {
            break;
        }
    }
    len
}

fn number_len(s: &str) -> usize {
    let b = s.as_bytes();
    if b.len() > 2 && b[0] == b'0' && matches!(b[1], b'x' | b'X' | b'b' | b'B' | b'o' | b'O') {
        let digits = b[2..].iter().take_while(|c| c.is_ascii_hexdigit() || **c == b'_').count();
        if digits > 0 {
            return 2 + digits;
        }
    }
    let mut n = b.iter().take_while(|c| c.is_ascii_digit()).count();
    // decimal fraction: `2.5`, but not `2.a` or a range `2..`
    if n < b.len() && b[n] == b'.' && b.get(n + 1).is_some_and(u8::is_ascii_digit) {
        n += 1 + b[n + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
    }
    // scientific: `1e5`, `2.5e-3`
    if n < b.len() && matches!(b[n], b'e' | b'E') {
        let mut m = n + 1;
        if m < b.len() && matches!(b[m], b'+' | b'-') {
            m += 1;
        }
        let exp = b[m.min(b.len())..].iter().take_while(|c| c.is_ascii_digit()).count();
        if exp > 0 {
            n = m + exp;
        }
    }
    n
}

fn block_comment_len(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = 0;
    while i < s.len() {
        let r = &s[i..];
        if r.starts_with("/-") {
            depth += 1;
            i += 2;
        } else if r.starts_with("-/") {
            depth -= 1;
            i += 2;
            if depth == 0 {
                return Some(i);
            }
        } else {
            i += r.chars().next()?.len_utf8();
        }
    }
    None
}

fn string_len(s: &str) -> Option<usize> {
    let mut escaped = false;
    for (idx, c) in s.char_indices().skip(1) {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            return Some(idx + 1);
        }
    }
    None
}

/// Tokens that are neither whitespace nor comments.
pub fn significant(tokens: &[Token]) -> Vec<Token> {
    tokens.iter().copied().filter(|t| !t.is_trivia()).collect()
}

/// Re-renders `src` with comments removed and every whitespace run outside
/// string literals collapsed to one space. Leading/trailing space is trimmed.
pub fn collapse_whitespace(src: &str) -> Result<String, ParseError> {
    let tokens = tokenize(src)?;
    let mut out = String::with_capacity(src.len());
    let mut pending_space = false;
    for t in &tokens {
        if t.is_trivia() {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push_str(t.text(src));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<&str> {
        significant(&tokenize(src).unwrap()).iter().map(|t| t.text(src)).collect()
    }

    #[test]
    fn qualified_names_and_unicode() {
        assert_eq!(
            texts("(hp: Nat.Prime p) (h₁ : p ∣ n) : S.card = 1983"),
            vec!["(", "hp", ":", "Nat.Prime", "p", ")", "(", "h₁", ":", "p", "∣", "n", ")", ":", "S.card", "=", "1983"]
        );
    }

    #[test]
    fn digit_letter_is_two_tokens() {
        assert_eq!(texts("2a+3b >= 0"), vec!["2", "a", "+", "3", "b", ">=", "0"]);
        assert_eq!(texts("x2 + y"), vec!["x2", "+", "y"]);
    }

    #[test]
    fn number_sets_are_symbols() {
        let src = "(n : ℕ) (x : ℝ)";
        let toks = significant(&tokenize(src).unwrap());
        let nat = toks.iter().find(|t| t.text(src) == "ℕ").unwrap();
        assert_eq!(nat.kind, TokenKind::Symbol);
    }

    #[test]
    fn projections_and_ranges() {
        assert_eq!(texts("p.1 + 2..5 + 2.5"), vec!["p", ".", "1", "+", "2", "..", "5", "+", "2.5"]);
    }

    #[test]
    fn comments_and_strings() {
        let src = "/-- doc /- nested -/ --/ theorem t -- trailing\n : \"a -- b\" = x";
        assert_eq!(texts(src), vec!["theorem", "t", ":", "\"a -- b\"", "=", "x"]);
        assert!(tokenize("/- open").is_err());
        assert!(tokenize("\"open").is_err());
    }

    #[test]
    fn factorial_identifier() {
        assert_eq!(texts("k! + (2 * k - 1)!"), vec!["k!", "+", "(", "2", "*", "k", "-", "1", ")", "!"]);
    }

    #[test]
    fn collapse() {
        assert_eq!(collapse_whitespace("  a   +\n\t b -- c\n").unwrap(), "a + b");
        assert_eq!(collapse_whitespace("\"x   y\"  z").unwrap(), "\"x   y\" z");
    }
}
