//! Canonical single-line form of a statement.

use crate::error::ParseError;
use crate::parse::{parse_statement, Binder, ParsedTheorem};
use crate::token::collapse_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum NamePolicy {
    #[default]
    Keep,
    Fixed(String),
    /// `<problem_id>_<sample_index>`, sanitized to a Lean identifier.
    PerSample {
        problem_id: String,
        sample_index: u32,
    },
}

impl NamePolicy {
    fn resolve(&self, current: &str) -> String {
        match self {
            NamePolicy::Keep => current.to_string(),
            NamePolicy::Fixed(name) => sanitize_ident(name),
            NamePolicy::PerSample { problem_id, sample_index } => {
                sanitize_ident(&format!("{problem_id}_{sample_index}"))
            }
        }
    }
}

/// Replaces characters that cannot appear in an identifier with `_`.
pub fn sanitize_ident(raw: &str) -> String {
    let mut out: String =
        raw.chars().map(|c| if c.is_alphanumeric() || c == '_' || c == '\'' { c } else { '_' }).collect();
    if !out.starts_with(|c: char| c.is_alphabetic() || c == '_') {
        out.insert_str(0, "t_");
    }
    out
}

/// `keyword name binders : goal := by sorry` on one line. Comments, doc
/// comments and attributes are dropped and whitespace runs outside string
/// literals become single spaces.
pub fn normalize_statement(parsed: &ParsedTheorem, policy: &NamePolicy) -> String {
    let mut s = String::new();
    s.push_str(parsed.keyword.as_str());
    s.push(' ');
    s.push_str(&policy.resolve(&parsed.name));
    for b in &parsed.binders {
        s.push(' ');
        s.push_str(&collapsed_binder(b).render());
    }
    s.push_str(" : ");
    s.push_str(&collapse(&parsed.goal_text));
    s.push_str(" := by sorry");
    s
}

/// Parses and normalizes in one step.
pub fn normalize_text(text: &str, policy: &NamePolicy) -> Result<String, ParseError> {
    parse_statement(text).map(|p| normalize_statement(&p, policy))
}

fn collapsed_binder(b: &Binder) -> Binder {
    Binder { names: b.names.clone(), type_text: collapse(&b.type_text), kind: b.kind }
}

fn collapse(text: &str) -> String {
    // pieces come out of a successful parse, so they always re-tokenize
    collapse_whitespace(text).unwrap_or_else(|_| text.split_whitespace().collect::<Vec<_>>().join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::{significant, tokenize};

    #[test]
    fn forces_tactic_sorry() {
        let out = normalize_text("theorem t (x : ℕ) : x = x := sorry", &NamePolicy::Keep).unwrap();
        assert_eq!(out, "theorem t (x : ℕ) : x = x := by sorry");
        let missing = normalize_text("theorem t (x : ℕ) : x = x", &NamePolicy::Keep).unwrap();
        assert_eq!(missing, out);
    }

    #[test]
    fn collapses_layout_and_drops_comments() {
        let src = "/-- doc -/\ntheorem   t\n  (x  y : ℝ) -- reals\n  (h : x <\n y) :\n  x ≤ y := by\n  sorry";
        assert_eq!(
            normalize_text(src, &NamePolicy::Keep).unwrap(),
            "theorem t (x y : ℝ) (h : x < y) : x ≤ y := by sorry"
        );
    }

    #[test]
    fn rename_changes_only_the_name_token() {
        let src = "theorem lem1 (a b : ℝ) (h : 0 < a) : a + b = b + a := by sorry";
        let policy = NamePolicy::PerSample { problem_id: "lean_workbook".into(), sample_index: 0 };
        let out = normalize_text(src, &policy).unwrap();
        let a = tokenize(src).unwrap();
        let b = tokenize(&out).unwrap();
        let (a, b) = (significant(&a), significant(&b));
        assert_eq!(a.len(), b.len());
        let diffs: Vec<(&str, &str)> =
            a.iter().zip(&b).map(|(x, y)| (x.text(src), y.text(&out))).filter(|(x, y)| x != y).collect();
        assert_eq!(diffs, vec![("lem1", "lean_workbook_0")]);
    }

    #[test]
    fn sanitizes_names() {
        assert_eq!(sanitize_ident("aops-123/x"), "aops_123_x");
        assert_eq!(sanitize_ident("42"), "t_42");
        assert_eq!(NamePolicy::Fixed("my thm".into()).resolve("x"), "my_thm");
    }
}
