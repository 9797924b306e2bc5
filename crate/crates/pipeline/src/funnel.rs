//! Per-round survivor counts and the round table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fault::Stage;

/// A job that did not produce a journaled candidate. Rerunning the round
/// retries it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub problem_id: String,
    pub sample_index: Option<u32>,
    pub stage: Stage,
    pub retryable: bool,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub round: u32,
    pub model_id: String,
    /// Accepted human labels from earlier rounds.
    pub train_labels: u64,
    pub extracted: u64,
    pub well_defined: u64,
    pub tag_kept: u64,
    pub translated: u64,
    pub cpn: u64,
    pub npn: u64,
    /// Rule id → fixes applied before the compile check.
    pub fixes_applied: BTreeMap<String, u64>,
    pub failures: Vec<StageFailure>,
}

impl FunnelReport {
    /// Problems survive each filter in order, samples each check.
    pub fn is_monotone(&self, n_samples: u32) -> bool {
        self.extracted >= self.well_defined
            && self.well_defined >= self.tag_kept
            && self.translated <= self.tag_kept * u64::from(n_samples)
            && self.cpn <= self.translated
            && self.npn <= self.cpn
    }

    pub fn row(&self) -> RoundRow {
        RoundRow {
            round: self.round,
            train_dataset: format!("{} human-labeled", self.train_labels),
            model: self.model_id.clone(),
            cpn: self.cpn,
            npn: self.npn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: u32,
    pub train_dataset: String,
    pub model: String,
    pub cpn: u64,
    pub npn: u64,
}

/// Plain-text table with Round / Train Dataset / Model / CPN / NPN columns.
pub fn render_table(rows: &[RoundRow]) -> String {
    let header = ["Round", "Train Dataset", "Model", "CPN", "NPN"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| [r.round.to_string(), r.train_dataset.clone(), r.model.clone(), r.cpn.to_string(), r.npn.to_string()])
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |vals: [&str; 5]| {
        let mut s = String::new();
        for (i, (v, w)) in vals.iter().zip(widths).enumerate() {
            let pad = w - v.chars().count();
            // counts are right-aligned
            if i >= 3 {
                s.push_str(&" ".repeat(pad));
                s.push_str(v);
            } else {
                s.push_str(v);
                s.push_str(&" ".repeat(pad));
            }
            s.push_str(if i == 4 { "\n" } else { "  " });
        }
        s
    };
    let mut out = line(header);
    out.push_str(&line(widths.map(|w| "-".repeat(w)).each_ref().map(String::as_str)));
    for row in &cells {
        out.push_str(&line(row.each_ref().map(String::as_str)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let rows = vec![RoundRow {
            round: 6,
            train_dataset: "+ human".into(),
            model: "final".into(),
            cpn: 205079,
            npn: 57231,
        }];
        let t = render_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Round  Train Dataset  Model"));
        assert!(lines[2].ends_with("205079  57231"));
        assert!(lines.iter().all(|l| !l.ends_with(' ')));
    }

    #[test]
    fn monotonicity() {
        let mut f = FunnelReport {
            extracted: 10,
            well_defined: 8,
            tag_kept: 5,
            translated: 5,
            cpn: 3,
            npn: 2,
            ..Default::default()
        };
        assert!(f.is_monotone(1));
        f.npn = 4;
        assert!(!f.is_monotone(1));
        f.npn = 2;
        f.translated = 10;
        assert!(!f.is_monotone(1));
        assert!(f.is_monotone(2));
    }
}
