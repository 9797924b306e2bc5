//! Deterministic crash injection for resume testing.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Translate,
    Lint,
    Compile,
    BackTranslate,
    Nli,
    Journal,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Translate, Stage::Lint, Stage::Compile, Stage::BackTranslate, Stage::Nli, Stage::Journal];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Translate => "translate",
            Stage::Lint => "lint",
            Stage::Compile => "compile",
            Stage::BackTranslate => "back_translate",
            Stage::Nli => "nli",
            Stage::Journal => "journal",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fails the `nth` (1-based) call of one stage, simulating a crash there.
#[derive(Debug, Default)]
pub struct FaultInjector {
    target: Option<(Stage, u64)>,
    calls: [AtomicU64; 6],
}

impl FaultInjector {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn crash_at(stage: Stage, nth: u64) -> Self {
        FaultInjector { target: Some((stage, nth.max(1))), ..Default::default() }
    }

    pub fn check(&self, stage: Stage) -> Result<(), PipelineError> {
        let idx = Stage::ALL.iter().position(|s| *s == stage).expect("stage listed");
        let call = self.calls[idx].fetch_add(1, Ordering::SeqCst) + 1;
        match self.target {
            Some((s, n)) if s == stage && call == n => Err(PipelineError::Injected { stage, call }),
            _ => Ok(()),
        }
    }

    pub fn calls(&self, stage: Stage) -> u64 {
        let idx = Stage::ALL.iter().position(|s| *s == stage).expect("stage listed");
        self.calls[idx].load(Ordering::SeqCst)
    }
}
