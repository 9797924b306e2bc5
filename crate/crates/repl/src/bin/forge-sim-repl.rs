use clap::Parser;
use forge_repl::sim::{run, SimArgs};

/// Simulated Lean REPL speaking the JSON-lines protocol.
#[derive(Parser)]
#[command(name = "forge-sim-repl")]
struct Cli {
    #[command(flatten)]
    sim: SimArgs,
}

fn main() {
    std::process::exit(run(&Cli::parse().sim));
}
