//! Orchestration of an active-learning round and the modes built on the
//! same stages: ingestion, review batches, label merging, best-of-k
//! translation and proof search.

pub mod config;
pub mod error;
pub mod fault;
pub mod filter;
pub mod funnel;
pub mod imo;
pub mod ingest;
pub mod labels;
pub mod prove;
pub mod review;
pub mod round;
pub mod stages;
pub mod synthetic;

pub use config::{CheckerSpec, Gateways, LintSettings, RoundConfig, StageBackends};
pub use error::PipelineError;
pub use fault::{FaultInjector, Stage};
pub use filter::{filter_by_tags, rephrase_answer, TagAllowlist, DEFAULT_TAGS};
pub use funnel::{render_table, FunnelReport, RoundRow, StageFailure};
pub use imo::{imo_mode, ImoReport, RankedStatement};
pub use ingest::{import_problems, ingest_dir, IngestReport};
pub use labels::{merge_human_labels, MergeReport, Rejection, VerdictSubmission};
pub use prove::{corpus_pass_rate, proof_search, ProofSearch};
pub use review::{enqueue_review, quota_map, ReviewBatch, ReviewRegistry, ReviewStrategy};
pub use round::{run_round, RoundOutcome};
pub use stages::Stages;
