//! Core data model for the autoformalization pipeline.
//!
//! Everything that crosses a stage boundary lives here: problems,
//! translation candidates with their verdict chain, per-round manifests,
//! the append-only journal that persists them, and the export formats
//! consumed downstream.

pub mod digest;
pub mod error;
pub mod export;
pub mod journal;
pub mod metrics;
pub mod store;
pub mod tags;
pub mod types;

pub use error::{CoreError, Result};
pub use metrics::{
    compute_round_stats, format_percent, pass_rate, weighted_accuracy, AccuracyRow, PassAtK, RoundStats,
    StatsAccumulator, VerdictRow,
};
pub use types::*;
