//! Round statistics: the CPN/NPN row and sampled accuracy per tag.

use std::collections::{BTreeMap, HashMap};

use forge_core::metrics::VerdictTable;
use forge_core::store::StoreReader;
use forge_core::{
    format_percent, weighted_accuracy, AccuracyRow, CoreError, HumanVerdict, RoundManifest, TranslationCandidate,
};
use forge_pipeline::round::accepted_labels;
use forge_pipeline::{FunnelReport, RoundRow};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub round: u32,
    /// `manifest` for rounds run here, `verdicts` for imported verdict tables.
    pub source: String,
    pub manifest: RoundManifest,
    pub row: RoundRow,
    pub funnel: Option<FunnelReport>,
    pub accuracy: Vec<AccuracyRow>,
    /// Absent until at least one NLI-passing candidate has been reviewed.
    pub weighted_accuracy: Option<f64>,
    pub reviewed: u64,
}

/// Sampled accuracy per tag over reviewed candidates that passed NLI. Only
/// an unedited `correct` verdict counts as correct. Rows follow the tag
/// counts, largest first; tags with no reviews are left out.
pub fn accuracy_rows(
    candidates: &[TranslationCandidate],
    tags: &HashMap<String, Vec<String>>,
    counts: &BTreeMap<String, u64>,
) -> Vec<AccuracyRow> {
    let mut sampled: HashMap<&str, (u64, u64)> = HashMap::new();
    for c in candidates.iter().filter(|c| c.nli_passed() && c.human != HumanVerdict::Unreviewed) {
        for t in tags.get(&c.problem_id).into_iter().flatten() {
            let e = sampled.entry(t.as_str()).or_default();
            e.1 += 1;
            if c.human == HumanVerdict::Correct {
                e.0 += 1;
            }
        }
    }
    let mut ordered: Vec<(&String, &u64)> = counts.iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    ordered
        .into_iter()
        .filter_map(|(tag, count)| {
            let (correct, total) = sampled.get(tag.as_str()).copied()?;
            Some(AccuracyRow { tag: tag.clone(), count: *count, sampled_correct: correct, sampled_total: total })
        })
        .collect()
}

fn weighted(rows: &[AccuracyRow]) -> Option<f64> {
    if rows.is_empty() {
        None
    } else {
        weighted_accuracy(rows).ok()
    }
}

fn train_labels(reader: &StoreReader, round: u32) -> CliResult<u64> {
    let mut n = 0;
    for r in reader.rounds()?.into_iter().filter(|r| *r < round) {
        n += accepted_labels(reader, r)?;
    }
    Ok(n)
}

pub fn load_stats(reader: &StoreReader, round: u32) -> CliResult<StatsReport> {
    if let Some(manifest) = reader.read_manifest(round)? {
        let candidates = reader.load_round(round)?;
        let tags: HashMap<String, Vec<String>> = reader.load_problems()?.into_iter().map(|p| (p.id, p.tags)).collect();
        let accuracy = match reader.read_json::<Vec<AccuracyRow>>(round, "accuracy.json")? {
            Some(rows) => rows,
            None => accuracy_rows(&candidates, &tags, &manifest.per_tag_counts),
        };
        let reviewed = candidates.iter().filter(|c| c.human != HumanVerdict::Unreviewed).count() as u64;
        let row = RoundRow {
            round,
            train_dataset: format!("{} human-labeled", train_labels(reader, round)?),
            model: manifest.model_id.clone(),
            cpn: manifest.cpn,
            npn: manifest.npn,
        };
        return Ok(StatsReport {
            round,
            source: "manifest".into(),
            funnel: reader.read_json(round, "funnel.json")?,
            weighted_accuracy: weighted(&accuracy),
            manifest,
            row,
            accuracy,
            reviewed,
        });
    }
    if let Some(table) = reader.read_json::<VerdictTable>(round, "verdicts.json")? {
        let manifest = table.stats()?.into_manifest("-", "", 0);
        let accuracy: Vec<AccuracyRow> = reader.read_json(round, "accuracy.json")?.unwrap_or_default();
        let row =
            RoundRow { round, train_dataset: "-".into(), model: "-".into(), cpn: manifest.cpn, npn: manifest.npn };
        return Ok(StatsReport {
            round,
            source: "verdicts".into(),
            funnel: None,
            weighted_accuracy: weighted(&accuracy),
            reviewed: accuracy.iter().map(|r| r.sampled_total).sum(),
            manifest,
            row,
            accuracy,
        });
    }
    Err(CoreError::UnknownRound(round).into())
}

/// Rounds that have either a manifest or a verdict table.
pub fn reportable_rounds(reader: &StoreReader) -> CliResult<Vec<u32>> {
    Ok(reader
        .rounds()?
        .into_iter()
        .filter(|r| {
            let dir = reader.round_dir(*r);
            dir.join("manifest.json").exists() || dir.join("verdicts.json").exists()
        })
        .collect())
}

pub fn render_accuracy(report: &StatsReport) -> String {
    let mut out = String::new();
    if report.accuracy.is_empty() {
        out.push_str(&format!("round {}: no reviewed candidates\n", report.round));
        return out;
    }
    let width = report.accuracy.iter().map(|r| r.tag.chars().count()).max().unwrap_or(3).max(3);
    out.push_str(&format!("{:<width$}  {:>8}  {:>7}  {:>8}\n", "Tag", "Count", "Sampled", "Accuracy"));
    for r in &report.accuracy {
        let acc =
            if r.sampled_total == 0 { "-".to_string() } else { format_percent(r.sampled_correct, r.sampled_total) };
        out.push_str(&format!(
            "{:<width$}  {:>8}  {:>7}  {:>8}\n",
            r.tag,
            r.count,
            format!("{}/{}", r.sampled_correct, r.sampled_total),
            acc
        ));
    }
    match report.weighted_accuracy {
        Some(w) => out.push_str(&format!("weighted accuracy: {:.1}%\n", w * 100.0)),
        None => out.push_str("weighted accuracy: -\n"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::{CompileKind, CompileVerdict, LintReport, TriState};

    fn cand(pid: &str, i: u32, nli: TriState, human: HumanVerdict) -> TranslationCandidate {
        TranslationCandidate {
            problem_id: pid.into(),
            round: 1,
            sample_index: i,
            statement_text: "theorem t : True := by sorry".into(),
            lint: LintReport::default(),
            compile: Some(CompileVerdict {
                kind: CompileKind::StatementPass,
                messages: vec![],
                elapsed_ms: 0,
                env_tag: "t".into(),
            }),
            back_translation: Some("x".into()),
            nli,
            human,
            modified_text: None,
            fingerprint: format!("{pid}{i}"),
        }
    }

    #[test]
    fn only_reviewed_nli_passing_candidates_are_sampled() {
        let cs = vec![
            cand("a", 0, TriState::Positive, HumanVerdict::Correct),
            cand("a", 1, TriState::Positive, HumanVerdict::Modified),
            cand("a", 2, TriState::Positive, HumanVerdict::Unreviewed),
            cand("a", 3, TriState::Negative, HumanVerdict::Correct),
            cand("b", 0, TriState::Positive, HumanVerdict::Rejected),
        ];
        let tags: HashMap<String, Vec<String>> =
            [("a".to_string(), vec!["x".to_string()]), ("b".to_string(), vec!["y".to_string(), "x".to_string()])]
                .into();
        let counts: BTreeMap<String, u64> = [("x".to_string(), 4), ("y".to_string(), 9), ("z".to_string(), 1)].into();
        let rows = accuracy_rows(&cs, &tags, &counts);
        assert_eq!(rows.iter().map(|r| r.tag.as_str()).collect::<Vec<_>>(), ["y", "x"]);
        assert_eq!((rows[0].sampled_correct, rows[0].sampled_total), (0, 1));
        assert_eq!((rows[1].sampled_correct, rows[1].sampled_total), (1, 3));
        // (9 * 0/1 + 4 * 1/3) / 13
        assert!((weighted(&rows).unwrap() - 4.0 / 39.0).abs() < 1e-12);
        assert_eq!(weighted(&[]), None);
    }
}
