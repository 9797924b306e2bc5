//! Best-of-k translation for hard problems: sample many statements, keep
//! the distinct ones that compile and survive the NLI check.

use std::collections::HashMap;

use forge_core::{CompileVerdict, Problem, TriState};
use forge_lean::normalize::sanitize_ident;
use forge_lean::NamePolicy;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::fault::FaultInjector;
use crate::filter::rephrase_answer;
use crate::stages::{fingerprint_of, Stages, StepError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedStatement {
    pub statement_text: String,
    pub fingerprint: String,
    /// Samples that collapsed to this statement.
    pub frequency: u32,
    /// Index of the first such sample.
    pub first_seen: u32,
    pub compile: Option<CompileVerdict>,
    pub back_translation: Option<String>,
    pub nli: TriState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RankedStatement {
    pub fn survives(&self) -> bool {
        self.compile.as_ref().is_some_and(CompileVerdict::is_pass) && self.nli.is_positive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImoReport {
    pub problem_id: String,
    pub samples: u32,
    pub distinct: u32,
    pub compiled: u32,
    /// NLI-passing statements, most frequent first.
    pub survivors: Vec<RankedStatement>,
    /// Every distinct statement: survivors, then the rest by frequency.
    pub ranked: Vec<RankedStatement>,
}

pub fn imo_mode(stages: &Stages, problem: &Problem, k: u32, temperature: f64) -> Result<ImoReport, PipelineError> {
    if k == 0 {
        return Err(PipelineError::Config("k must be at least 1".into()));
    }
    let p = rephrase_answer(problem.clone());
    let samples = stages.gateways.translate.translate(&p.id, &p.nl_text, k, temperature)?;
    let policy = NamePolicy::Fixed(sanitize_ident(&p.id));

    let mut groups: Vec<RankedStatement> = Vec::new();
    let mut by_fp: HashMap<String, usize> = HashMap::new();
    for (i, raw) in (0..k).zip(&samples) {
        let normalized = Stages::normalize(raw, &policy);
        let (text, _) = stages.lint_and_fix(&normalized, &p.nl_text);
        let fp = fingerprint_of(&text);
        match by_fp.get(&fp) {
            Some(&g) => groups[g].frequency += 1,
            None => {
                by_fp.insert(fp.clone(), groups.len());
                groups.push(RankedStatement {
                    statement_text: text,
                    fingerprint: fp,
                    frequency: 1,
                    first_seen: i,
                    compile: None,
                    back_translation: None,
                    nli: TriState::Unjudged,
                    error: None,
                });
            }
        }
    }

    let faults = FaultInjector::none();
    for g in &mut groups {
        let keys = [g.fingerprint.as_str(), p.id.as_str()];
        match stages.verify(&g.statement_text, &p.nl_text, &keys, &faults) {
            Ok(v) => {
                g.compile = Some(v.compile);
                g.back_translation = v.back_translation;
                g.nli = v.nli;
            }
            Err(StepError::Abort(e)) => return Err(e),
            Err(StepError::Failed { stage, error }) => g.error = Some(format!("{stage}: {error}")),
        }
    }

    groups.sort_by(|a, b| {
        b.survives().cmp(&a.survives()).then(b.frequency.cmp(&a.frequency)).then(a.first_seen.cmp(&b.first_seen))
    });
    Ok(ImoReport {
        problem_id: p.id.clone(),
        samples: k,
        distinct: groups.len() as u32,
        compiled: groups.iter().filter(|g| g.compile.as_ref().is_some_and(CompileVerdict::is_pass)).count() as u32,
        survivors: groups.iter().filter(|g| g.survives()).cloned().collect(),
        ranked: groups,
    })
}
