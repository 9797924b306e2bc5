//! Scripted workloads for the mock backend: forum posts, problems and the
//! model responses that go with them. Used by tests and `forge demo`.

use std::path::Path;

use forge_core::{Problem, TriState};
use forge_llm::{MockEntry, PromptId};

use crate::error::PipelineError;

/// How the translator's answer for a problem is scripted to behave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Compiles and back-translates faithfully.
    Good,
    /// Chained relation; compiles once the linter splits it.
    Chained,
    /// Operator with no right operand; never compiles.
    Broken,
    /// Compiles, but the NLI judge says the meaning drifted.
    Drifted,
    /// Unqualified `sqrt`; compiles once qualified.
    Unqualified,
}

impl Outcome {
    pub fn of(index: usize) -> Outcome {
        match index % 5 {
            0 => Outcome::Good,
            1 => Outcome::Chained,
            2 => Outcome::Broken,
            3 => Outcome::Drifted,
            _ => Outcome::Unqualified,
        }
    }

    pub fn compiles(self) -> bool {
        self != Outcome::Broken
    }

    pub fn passes_nli(self) -> bool {
        self.compiles() && self != Outcome::Drifted
    }
}

const TAGS: [&str; 4] = ["inequality", "number_theory", "polynomial", "trigonometry"];
pub const POST_SIZE: usize = 5;

/// Judgement scripted for the problem with global index `i`.
pub fn well_defined_of(i: usize) -> TriState {
    match i % 10 {
        9 => TriState::Negative,
        8 => TriState::Indeterminate,
        _ => TriState::Positive,
    }
}

pub fn tags_of(i: usize) -> Vec<String> {
    if i.is_multiple_of(7) {
        vec!["geometry".into()]
    } else if i.is_multiple_of(6) {
        vec![TAGS[i % 4].into(), "algebra".into()]
    } else {
        vec![TAGS[i % 4].into()]
    }
}

pub fn problem_id(i: usize) -> String {
    format!("post-{:02}#{}", i / POST_SIZE, i % POST_SIZE)
}

fn nl_text(i: usize) -> (String, Option<String>) {
    if i.is_multiple_of(3) {
        (format!("Let a be a positive real. Compute the least value of a + {i}."), Some(i.to_string()))
    } else {
        (format!("Let a be a positive real number. Prove that a + {i} > 0."), None)
    }
}

pub fn statement_of(i: usize) -> String {
    let name = format!("gen_{i}");
    let body = match Outcome::of(i) {
        Outcome::Good | Outcome::Drifted => format!("theorem {name} (a : ℝ) (h₀ : 0 < a) : a + {i} > 0 := by sorry"),
        Outcome::Chained => format!("theorem {name} (a b c : ℝ) (h₀ : a ≥ b ≥ c) : a + {i} ≥ c + {i} := by sorry"),
        Outcome::Broken => format!("theorem {name} (a : ℕ) : a + = {i} := by sorry"),
        Outcome::Unqualified => format!("theorem {name} (x : ℝ) (h₀ : 0 ≤ x) : sqrt x + {i} ≥ 0 := by sorry"),
    };
    if i.is_multiple_of(2) {
        format!("```lean\n{body}\n```")
    } else {
        body
    }
}

fn entry(prompt: PromptId, key: &str, responses: Vec<String>) -> MockEntry {
    MockEntry { prompt, key: Some(key.into()), contains: None, responses, fail_times: 0 }
}

fn contains(prompt: PromptId, needle: &str, response: &str) -> MockEntry {
    MockEntry { prompt, key: None, contains: Some(needle.into()), responses: vec![response.into()], fail_times: 0 }
}

#[derive(Debug, Clone)]
pub struct Workload {
    /// `(file name, contents)` of each forum post.
    pub posts: Vec<(String, String)>,
    /// The problems ingestion should produce, in id order.
    pub problems: Vec<Problem>,
    pub mock: Vec<MockEntry>,
}

impl Workload {
    /// `n` problems spread over posts of five.
    pub fn funnel(n: usize) -> Workload {
        let mut problems = Vec::with_capacity(n);
        let mut mock = Vec::new();
        let mut posts = Vec::new();
        for post in 0..n.div_ceil(POST_SIZE) {
            let post_id = format!("post-{post:02}");
            let mut drafts = Vec::new();
            for i in post * POST_SIZE..((post + 1) * POST_SIZE).min(n) {
                let (text, answer) = nl_text(i);
                let id = problem_id(i);
                drafts.push(serde_json::json!({
                    "problem": text,
                    "answer": answer.clone().unwrap_or_default(),
                    "tags": tags_of(i).iter().map(|t| t.replace('_', " ")).collect::<Vec<_>>(),
                }));
                let judgement = match well_defined_of(i) {
                    TriState::Positive => "Every variable is introduced. **well-defined**",
                    TriState::Negative => "The goal is missing. **ill-defined**",
                    _ => "Hard to say.",
                };
                mock.push(entry(PromptId::WellDefined, &id, vec![judgement.into()]));
                mock.push(entry(PromptId::Nl2fl, &id, vec![statement_of(i)]));
                if Outcome::of(i) == Outcome::Drifted {
                    mock.push(entry(
                        PromptId::Nli,
                        &id,
                        vec!["The second problem changes the goal. **different**".into()],
                    ));
                }
                problems.push(Problem {
                    id,
                    source: post_id.clone(),
                    nl_text: text,
                    answer,
                    tags: tags_of(i),
                    well_defined: well_defined_of(i),
                });
            }
            let body = format!(
                "Here are the problems I found:\n```json\n{}\n```",
                serde_json::to_string_pretty(&drafts).expect("json")
            );
            mock.push(entry(PromptId::Extract, &post_id, vec![body]));
            posts.push((
                format!("{post_id}.txt"),
                format!("Thread {post}: a discussion with {} problems.", drafts.len()),
            ));
        }
        mock.push(entry(PromptId::Fl2nl, "*", vec!["Let a be a positive real number. Prove the stated bound.".into()]));
        mock.push(entry(PromptId::Nli, "*", vec!["Both ask for the same bound. **same**".into()]));
        mock.push(entry(PromptId::Prove, "*", vec!["by positivity".into()]));
        Workload { posts, problems, mock }
    }

    /// One competition problem whose 100 samples collapse to three distinct
    /// statements: one faithful (50 samples, renamed and re-spaced), one
    /// that compiles but drifts (30) and one that does not compile (20).
    pub fn imo() -> Workload {
        let problem = Problem {
            id: "imo-1983-p6".into(),
            source: "imo".into(),
            nl_text: "Let a, b and c be the lengths of the sides of a triangle. Prove that \
                      a^2 b (a - b) + b^2 c (b - c) + c^2 a (c - a) ≥ 0."
                .into(),
            answer: None,
            tags: vec!["inequality".into()],
            well_defined: TriState::Positive,
        };
        let goal = "a ^ 2 * b * (a - b) + b ^ 2 * c * (b - c) + c ^ 2 * a * (c - a) ≥ 0";
        let faithful = [
            format!("theorem imo_1983_p6 (a b c : ℝ) (h₀ : 0 < a ∧ 0 < b ∧ 0 < c) (h₁ : c < a + b) (h₂ : b < a + c) (h₃ : a < b + c) : {goal} := by sorry"),
            format!("theorem triangle_ineq (a b c : ℝ) (h₀ : 0 < a ∧ 0 < b ∧ 0 < c) (h₁ : c < a + b) (h₂ : b < a + c) (h₃ : a < b + c) : {goal} := by sorry"),
            format!("theorem imo_1983_p6\n  (a b c : ℝ)\n  (h₀ : 0 < a ∧ 0 < b ∧ 0 < c)\n  (h₁ : c < a + b)\n  (h₂ : b < a + c)\n  (h₃ : a < b + c) :\n  {goal} := by\n  sorry"),
            format!("```lean\ntheorem x (a : ℝ) (b : ℝ) (c : ℝ) (h₀ : 0 < a ∧ 0 < b ∧ 0 < c) (h₁ : c < a + b) (h₂ : b < a + c) (h₃ : a < b + c) : {goal} := by sorry\n```"),
            format!("theorem imo_1983_p6 (a b c : ℝ) (h₀ : 0 < a ∧ 0 < b ∧ 0 < c) (h₁ : c < a + b) (h₂ : b < a + c) (h₃ : a < b + c) :   {goal}   := by sorry"),
        ];
        let drifted = format!("theorem imo_1983_p6 (a b c : ℝ) (h₀ : 0 < a ∧ 0 < b ∧ 0 < c) : {goal} := by sorry");
        let broken = "theorem imo_1983_p6 (a b c : ℝ) (h₀ : 0 < a) : a ^ 2 * b + ≥ 0 := by sorry".to_string();
        // interleaved so every block of ten holds 5 / 3 / 2
        let mut samples = Vec::with_capacity(100);
        for i in 0..100 {
            samples.push(match i % 10 {
                0..=4 => faithful[(i / 10 + i) % faithful.len()].clone(),
                5..=7 => drifted.clone(),
                _ => broken.clone(),
            });
        }
        let mock = vec![
            entry(PromptId::Nl2fl, &problem.id, samples),
            contains(
                PromptId::Fl2nl,
                "h₃ : a < b + c",
                "For a triangle with sides a, b, c, show the cyclic sum is nonnegative.",
            ),
            entry(PromptId::Fl2nl, "*", vec!["For positive a, b, c, show the cyclic sum is nonnegative.".into()]),
            contains(
                PromptId::Nli,
                "For a triangle with sides",
                "Both describe the same triangle inequality. **same**",
            ),
            entry(PromptId::Nli, "*", vec!["The triangle condition is lost. **different**".into()]),
        ];
        Workload { posts: Vec::new(), problems: vec![problem], mock }
    }

    pub fn write_posts(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        for (name, text) in &self.posts {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
        }
        Ok(())
    }

    pub fn write_problems(&self, path: &Path) -> Result<(), PipelineError> {
        let mut out = String::new();
        for p in &self.problems {
            out.push_str(&serde_json::to_string(p).expect("json"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| PipelineError::io(path, e))
    }

    /// Writes the scripted responses as a mock fixture directory.
    pub fn write_mock(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let mut out = String::new();
        for e in &self.mock {
            out.push_str(&serde_json::to_string(e).expect("json"));
            out.push('\n');
        }
        let path = dir.join("responses.jsonl");
        std::fs::write(&path, out).map_err(|e| PipelineError::io(&path, e))
    }
}
