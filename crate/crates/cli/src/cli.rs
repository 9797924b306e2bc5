use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use forge_repl::sim::SimArgs;

use crate::checker::CheckerArgs;

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Statement autoformalization pipeline")]
pub struct Cli {
    /// Store directory. Commands that take --config default to the
    /// config's store.
    #[arg(long, env = "FORGE_STORE", global = true)]
    pub store: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract problems from a directory of forum posts.
    Ingest {
        dir: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Import problems from a JSONL file.
    Import { file: PathBuf },
    /// Print the well-defined problems whose tags pass the allowlist, as JSONL.
    Filter {
        /// Comma-separated allowlist; the default list when absent.
        #[arg(long, value_delimiter = ',')]
        tags: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Round(RoundCommand),
    #[command(subcommand)]
    Review(ReviewCommand),
    #[command(subcommand)]
    Labels(LabelsCommand),
    #[command(subcommand)]
    Export(ExportCommand),
    /// Round table and sampled accuracy.
    Stats {
        /// One round; every round when absent.
        #[arg(long)]
        round: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Sample many translations of each problem and rank the distinct ones.
    Imo {
        problems: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        k: u32,
        #[arg(long, default_value_t = 0.7)]
        temperature: f64,
        /// Write the full reports here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        checker: CheckerArgs,
    },
    /// Search for proofs of compiled statements.
    Prove {
        /// JSONL of candidates, or of `{"id", "statement"}` objects.
        candidates: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Attempts per statement; the config's `proof_k` when absent.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        checker: CheckerArgs,
    },
    /// Report lint findings for a Lean file as JSON.
    Lint {
        file: PathBuf,
        /// Natural-language problem text, for rules that compare against it.
        #[arg(long)]
        nl: Option<String>,
    },
    /// Apply every fixable lint finding and print the result.
    Fix {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Repl(ReplCommand),
    /// Write a scripted demo workload (posts, mock responses, configs).
    Demo {
        dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        problems: usize,
    },
    /// Protocol-compatible REPL simulator.
    #[command(hide = true)]
    SimRepl(SimArgs),
}

#[derive(Debug, Subcommand)]
pub enum RoundCommand {
    /// Translate, check and judge every eligible problem; resumes where a
    /// previous run stopped.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Fail the nth call of a stage, e.g. `compile:3` (testing aid).
        #[arg(long, hide = true)]
        crash_at: Option<String>,
        #[command(flatten)]
        checker: CheckerArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Select candidates for human review and write `review_batch.json`.
    Enqueue {
        #[arg(long)]
        round: u32,
        #[command(flatten)]
        select: SelectArgs,
    },
    /// Serve the review API (and the UI, if built).
    Serve {
        #[arg(long)]
        round: u32,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory with the built review UI.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// Concurrent checks before the API answers 503.
        #[arg(long, default_value_t = 4)]
        max_checks: usize,
        #[command(flatten)]
        select: SelectArgs,
        #[command(flatten)]
        checker: CheckerArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[arg(long, default_value = "tag_stratified")]
    pub strategy: String,
    /// Sampling seed; the round's config seed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum LabelsCommand {
    /// Merge human verdicts from a JSON array or JSONL file.
    Merge {
        file: PathBuf,
        #[arg(long)]
        round: u32,
        #[command(flatten)]
        checker: CheckerArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// Deduplicated statements that passed NLI or were accepted by a human.
    Dataset {
        /// Comma-separated rounds; all when absent.
        #[arg(long, value_delimiter = ',')]
        rounds: Option<Vec<u32>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Training pairs in both directions from human-accepted candidates.
    Pairs {
        #[arg(long, value_delimiter = ',')]
        rounds: Option<Vec<u32>>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReplCommand {
    /// Elaborate one statement (or statement plus proof) and print the verdict.
    Check {
        file: PathBuf,
        /// File holding a proof to attach to the statement.
        #[arg(long)]
        proof: Option<PathBuf>,
        #[command(flatten)]
        checker: CheckerArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Jsonl,
}
