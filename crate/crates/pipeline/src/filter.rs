use std::collections::BTreeSet;

use forge_core::tags::{is_normalized, normalize_tag};
use forge_core::Problem;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

pub const DEFAULT_TAGS: [&str; 8] = [
    "inequality",
    "number_theory",
    "trigonometry",
    "modular_arithmetic",
    "induction",
    "functional_equation",
    "complex_numbers",
    "polynomial",
];

/// Problem categories worth formalizing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TagAllowlist {
    tags: BTreeSet<String>,
}

impl Default for TagAllowlist {
    fn default() -> Self {
        TagAllowlist { tags: DEFAULT_TAGS.iter().map(|t| t.to_string()).collect() }
    }
}

impl TagAllowlist {
    /// Tags are normalized on the way in.
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(tags: I) -> Result<Self, PipelineError> {
        let tags: BTreeSet<String> = tags.into_iter().map(|t| normalize_tag(t.as_ref())).collect();
        if tags.is_empty() || tags.iter().any(|t| !is_normalized(t)) {
            return Err(PipelineError::Config("tag allowlist must hold at least one non-empty tag".into()));
        }
        Ok(TagAllowlist { tags })
    }

    pub fn allows(&self, problem: &Problem) -> bool {
        problem.tags.iter().any(|t| self.tags.contains(t))
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }
}

impl TryFrom<Vec<String>> for TagAllowlist {
    type Error = PipelineError;

    fn try_from(v: Vec<String>) -> Result<Self, PipelineError> {
        TagAllowlist::new(v)
    }
}

impl From<TagAllowlist> for Vec<String> {
    fn from(a: TagAllowlist) -> Self {
        a.tags.into_iter().collect()
    }
}

pub fn filter_by_tags(problems: Vec<Problem>, allowlist: &TagAllowlist) -> Vec<Problem> {
    problems.into_iter().filter(|p| allowlist.allows(p)).collect()
}

/// Turns a calculation problem into a statement to prove by appending its
/// answer. Applying it twice changes nothing.
pub fn rephrase_answer(mut problem: Problem) -> Problem {
    if let Some(answer) = &problem.answer {
        let sentence = format!("Show that it is {answer}.");
        let text = problem.nl_text.trim_end();
        if !text.ends_with(&sentence) {
            problem.nl_text = if text.is_empty() { sentence } else { format!("{text} {sentence}") };
        }
    }
    problem
}
