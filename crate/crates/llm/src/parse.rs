//! Pure parsers for model output.

use std::sync::LazyLock;

use forge_core::TriState;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Positive,
    Negative,
    Indeterminate,
}

impl Verdict {
    pub fn to_tristate(self) -> TriState {
        match self {
            Verdict::Positive => TriState::Positive,
            Verdict::Negative => TriState::Negative,
            Verdict::Indeterminate => TriState::Indeterminate,
        }
    }
}

/// A judgement together with the response it was read from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriVerdict {
    pub value: Verdict,
    pub raw: String,
}

/// Reads the last `**marker**` in `text`, ignoring case.
pub fn parse_bold_verdict(text: &str, positive: &str, negative: &str) -> Verdict {
    debug_assert!(!positive.is_empty() && !negative.is_empty() && !positive.eq_ignore_ascii_case(negative));
    let lowered = text.to_lowercase();
    let last = |marker: &str| lowered.rfind(&format!("**{}**", marker.to_lowercase()));
    match (last(positive), last(negative)) {
        (None, None) => Verdict::Indeterminate,
        (Some(_), None) => Verdict::Positive,
        (None, Some(_)) => Verdict::Negative,
        (Some(p), Some(n)) => {
            if p > n {
                Verdict::Positive
            } else {
                Verdict::Negative
            }
        }
    }
}

/// One problem as the extraction model reported it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDraft {
    pub problem: String,
    /// `None` for proof problems, reported by the model as `""`.
    pub answer: Option<String>,
    pub tags: Vec<String>,
}

static FENCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```[A-Za-z0-9_+-]*[ \t]*\r?\n?(.*?)```").expect("static pattern"));
static TRAILING_COMMA: LazyLock<Regex> = LazyLock::new(|| Regex::new(r",(\s*[\]}])").expect("static pattern"));

/// Contents of the first fenced block, or the whole text when there is none.
pub fn strip_code_fence(text: &str) -> &str {
    match FENCE.captures(text) {
        Some(c) => c.get(1).expect("group").as_str().trim(),
        None => text.trim(),
    }
}

/// The first top-level `[...]` in `text`, skipping brackets inside strings.
fn outermost_array(text: &str) -> Option<&str> {
    let start = text.find('[')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text[start..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_array(text: &str) -> Option<Vec<Value>> {
    let slice = outermost_array(text)?;
    serde_json::from_str(slice).ok().or_else(|| serde_json::from_str(&TRAILING_COMMA.replace_all(slice, "$1")).ok())
}

fn string_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

fn draft(v: &Value) -> Option<ProblemDraft> {
    let obj = v.as_object()?;
    let problem = obj.get("problem").and_then(string_of).filter(|p| !p.is_empty())?;
    let answer = obj.get("answer").and_then(string_of).filter(|a| !a.is_empty());
    let tags = match obj.get("tags") {
        Some(Value::Array(items)) => items.iter().filter_map(string_of).filter(|t| !t.is_empty()).collect(),
        Some(Value::String(s)) => s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect(),
        _ => Vec::new(),
    };
    Some(ProblemDraft { problem, answer, tags })
}

/// Reads the extraction model's JSON array, tolerating code fences,
/// surrounding prose and trailing commas. Elements without a problem text
/// are dropped.
pub fn parse_extraction_json(text: &str) -> Result<Vec<ProblemDraft>, LlmError> {
    let values = FENCE
        .captures_iter(text)
        .filter_map(|c| parse_array(c.get(1).expect("group").as_str()))
        .next()
        .or_else(|| parse_array(text))
        .ok_or_else(|| LlmError::ExtractionFailure { reason: "no JSON array found".into(), raw: text.to_string() })?;
    Ok(values.iter().filter_map(draft).collect())
}
