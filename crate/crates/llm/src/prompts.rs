use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::LlmError;

const BUILTIN: &str = include_str!("../prompts/prompts.toml");

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{\{([a-z_]+)\}\}").expect("static pattern"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptId {
    Extract,
    WellDefined,
    Nl2fl,
    Fl2nl,
    Nli,
    Prove,
}

impl PromptId {
    pub const ALL: [PromptId; 6] =
        [PromptId::Extract, PromptId::WellDefined, PromptId::Nl2fl, PromptId::Fl2nl, PromptId::Nli, PromptId::Prove];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptId::Extract => "extract",
            PromptId::WellDefined => "well_defined",
            PromptId::Nl2fl => "nl2fl",
            PromptId::Fl2nl => "fl2nl",
            PromptId::Nli => "nli",
            PromptId::Prove => "prove",
        }
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptId {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, LlmError> {
        PromptId::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| LlmError::UnknownPrompt(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub prompt_id: PromptId,
    pub template_text: String,
}

impl PromptTemplate {
    pub fn placeholders(&self) -> Vec<&str> {
        PLACEHOLDER.captures_iter(&self.template_text).map(|c| c.get(1).expect("group").as_str()).collect()
    }

    /// Substitutes every placeholder; each must be supplied exactly once.
    pub fn render(&self, vars: &[(&str, &str)]) -> Result<String, LlmError> {
        let err = |reason: String| LlmError::Template { prompt: self.prompt_id.to_string(), reason };
        let wanted = self.placeholders();
        if let Some((name, _)) = vars.iter().find(|(n, _)| !wanted.contains(n)) {
            return Err(err(format!("no placeholder {{{{{name}}}}}")));
        }
        let mut missing = None;
        let out = PLACEHOLDER.replace_all(&self.template_text, |c: &regex::Captures<'_>| {
            let name = &c[1];
            match vars.iter().find(|(n, _)| *n == name) {
                Some((_, v)) => v.to_string(),
                None => {
                    missing.get_or_insert_with(|| name.to_string());
                    String::new()
                }
            }
        });
        match missing {
            Some(name) => Err(err(format!("missing value for {{{{{name}}}}}"))),
            None => Ok(out.into_owned()),
        }
    }

    /// The template with placeholder-only lines and the surrounding labels
    /// removed; for prompts quoted from the source this is the quoted text.
    pub fn instruction(&self) -> &str {
        let first = PLACEHOLDER.find(&self.template_text).map_or(self.template_text.len(), |m| m.start());
        let head = &self.template_text[..first];
        match head.find("\n\n") {
            Some(i) => &head[..i],
            None => head.trim_end(),
        }
    }
}

#[derive(Deserialize)]
struct Entry {
    template: String,
}

/// All prompts by id, loaded from the bundled file or an override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptRegistry {
    prompts: BTreeMap<PromptId, PromptTemplate>,
}

impl Default for PromptRegistry {
    fn default() -> Self {
        PromptRegistry::parse(BUILTIN).expect("bundled prompts parse")
    }
}

impl PromptRegistry {
    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let raw: BTreeMap<String, Entry> =
            toml::from_str(text).map_err(|e| LlmError::Config(format!("prompt file: {e}")))?;
        let mut prompts = BTreeMap::new();
        for (id, entry) in raw {
            let prompt_id: PromptId = id.parse()?;
            prompts.insert(prompt_id, PromptTemplate { prompt_id, template_text: entry.template });
        }
        if let Some(missing) = PromptId::ALL.iter().find(|p| !prompts.contains_key(*p)) {
            return Err(LlmError::Config(format!("prompt file lacks {missing}")));
        }
        Ok(PromptRegistry { prompts })
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|source| LlmError::Io { path: path.to_path_buf(), source })?;
        PromptRegistry::parse(&text)
    }

    pub fn get(&self, id: PromptId) -> &PromptTemplate {
        &self.prompts[&id]
    }

    pub fn render(&self, id: PromptId, vars: &[(&str, &str)]) -> Result<String, LlmError> {
        self.get(id).render(vars)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.prompts.values()
    }

    /// Digest of every template, recorded in round manifests so prompt
    /// drift shows up as a config change.
    pub fn digest(&self) -> String {
        forge_core::digest::json_digest(&self.prompts.values().collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_prompt_has_its_inputs() {
        let r = PromptRegistry::default();
        assert_eq!(r.get(PromptId::Extract).placeholders(), vec!["post"]);
        assert_eq!(r.get(PromptId::WellDefined).placeholders(), vec!["problem"]);
        assert_eq!(r.get(PromptId::Nl2fl).placeholders(), vec!["problem"]);
        assert_eq!(r.get(PromptId::Fl2nl).placeholders(), vec!["statement"]);
        assert_eq!(r.get(PromptId::Nli).placeholders(), vec!["original", "back_translated"]);
        assert_eq!(r.get(PromptId::Prove).placeholders(), vec!["statement"]);
    }

    #[test]
    fn render_checks_names() {
        let r = PromptRegistry::default();
        let text = r.render(PromptId::Nli, &[("original", "A"), ("back_translated", "B")]).unwrap();
        assert!(text.ends_with("Problem 1:\nA\n\nProblem 2:\nB"));
        assert!(r.render(PromptId::Nli, &[("original", "A")]).is_err());
        assert!(r.render(PromptId::Fl2nl, &[("statement", "s"), ("extra", "x")]).is_err());
    }

    #[test]
    fn values_are_not_rescanned() {
        let r = PromptRegistry::default();
        let text = r.render(PromptId::Fl2nl, &[("statement", "{{problem}}")]).unwrap();
        assert!(text.ends_with("{{problem}}"));
    }

    #[test]
    fn incomplete_file_is_rejected() {
        assert!(PromptRegistry::parse("[nli]\ntemplate = 'x {{original}}'\n").is_err());
        assert!(PromptRegistry::parse("[bogus]\ntemplate = 'x'\n").is_err());
    }
}
