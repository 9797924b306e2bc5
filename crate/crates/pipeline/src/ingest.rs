//! Forum posts to problems: extraction, tag normalization and the
//! well-definedness judge.

use std::path::{Path, PathBuf};

use forge_core::store::Store;
use forge_core::tags::normalize_tags;
use forge_core::{Problem, TriState};
use forge_llm::Gateway;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::filter::{filter_by_tags, TagAllowlist};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub posts: u64,
    pub extracted: u64,
    pub well_defined: u64,
    pub ill_defined: u64,
    pub indeterminate: u64,
    /// Problems already in the store.
    pub skipped: u64,
    /// Posts whose extraction failed; `(file, message)`.
    pub failed_posts: Vec<(String, String)>,
}

/// Post files in a directory, sorted by name. Hidden files are skipped.
pub fn post_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))? {
        let path = entry.map_err(|e| PipelineError::io(dir, e))?.path();
        let hidden = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Extracts problems from one post. Ids are `<post>#<index>`.
pub fn extract_post(
    extract: &Gateway,
    judge: &Gateway,
    post_id: &str,
    text: &str,
) -> Result<Vec<Problem>, PipelineError> {
    let drafts = extract.extract_problems(post_id, text)?;
    let mut out = Vec::with_capacity(drafts.len());
    for (i, d) in drafts.into_iter().enumerate() {
        let id = format!("{post_id}#{i}");
        let verdict = judge.judge_well_defined(&id, &d.problem)?;
        out.push(Problem {
            id,
            source: post_id.to_string(),
            nl_text: d.problem,
            answer: d.answer.filter(|a| !a.trim().is_empty()),
            tags: normalize_tags(&d.tags),
            well_defined: verdict.value.to_tristate(),
        });
    }
    Ok(out)
}

/// Reads every post in `dir` and appends new problems to the store.
pub fn ingest_dir(
    store: &mut Store,
    extract: &Gateway,
    judge: &Gateway,
    dir: &Path,
) -> Result<IngestReport, PipelineError> {
    let mut report = IngestReport::default();
    for path in post_files(dir)? {
        let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        let post_id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("post").to_string();
        report.posts += 1;
        let problems = match extract_post(extract, judge, &post_id, &text) {
            Ok(p) => p,
            Err(PipelineError::Llm(e)) if !e.is_retryable() => {
                log::warn!("{}: {e}", path.display());
                report.failed_posts.push((path.display().to_string(), e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        for p in problems {
            report.extracted += 1;
            match p.well_defined {
                TriState::Positive => report.well_defined += 1,
                TriState::Negative => report.ill_defined += 1,
                _ => report.indeterminate += 1,
            }
            if store.has_problem(&p.id)? {
                report.skipped += 1;
            } else {
                store.append_problem(&p)?;
            }
        }
    }
    Ok(report)
}

pub fn read_problems(path: &Path) -> Result<Vec<Problem>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut p: Problem = serde_json::from_str(line)
            .map_err(|e| PipelineError::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        p.tags = normalize_tags(&p.tags);
        p.validate()?;
        out.push(p);
    }
    Ok(out)
}

/// Appends problems from a JSONL file, skipping ids already present.
/// Returns the number added.
pub fn import_problems(store: &mut Store, path: &Path) -> Result<u64, PipelineError> {
    let mut added = 0;
    for p in read_problems(path)? {
        if !store.has_problem(&p.id)? {
            store.append_problem(&p)?;
            added += 1;
        }
    }
    Ok(added)
}

/// Problems in the store that pass the allowlist and were not judged
/// ill-defined.
pub fn filtered_problems(
    store: &forge_core::store::StoreReader,
    allowlist: &TagAllowlist,
) -> Result<Vec<Problem>, PipelineError> {
    let problems = store.load_problems()?.into_iter().filter(crate::round::is_well_defined).collect();
    Ok(filter_by_tags(problems, allowlist))
}
