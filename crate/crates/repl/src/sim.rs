//! A stand-in REPL speaking the same wire protocol, for tests and demos
//! on machines without Lean.
//!
//! Elaboration is approximated: a command fails when it does not parse,
//! has a dangling operator, or carries a fixable lint finding. Line
//! comments of the form `-- sim:<directive>` script the process itself:
//! `sleep <ms>`, `crash`, `hang`, `error <text>`.

use std::io::{BufRead, Write};
use std::time::Duration;

use clap::Args;
use forge_core::FindingSeverity;
use forge_lean::parse::parse_with_layout;
use forge_lean::token::{significant, tokenize, TokenKind};
use forge_lean::{lint, Terminator};
use serde_json::json;

use crate::classify::SORRY_WARNING;
use crate::protocol::{ReplMessage, ReplRequest};

pub const DEFAULT_TAG: &str = "4.8.0-rc1";

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Print the version tag and exit.
    #[arg(long)]
    pub version: bool,
    /// Version tag to report.
    #[arg(long, default_value = DEFAULT_TAG)]
    pub tag: String,
    /// Extra delay before answering every command.
    #[arg(long, default_value_t = 0)]
    pub delay_ms: u64,
    /// Delay before answering the header command (simulated import).
    #[arg(long, default_value_t = 0)]
    pub startup_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Sleep(u64),
    Crash,
    Hang,
    Error(String),
}

#[derive(Debug, Clone, Default)]
pub struct Simulated {
    pub messages: Vec<ReplMessage>,
    pub sorries: Vec<serde_json::Value>,
    pub directives: Vec<Directive>,
}

pub fn directives(cmd: &str) -> Vec<Directive> {
    cmd.lines()
        .filter_map(|l| l.split_once("-- sim:").map(|(_, d)| d.trim()))
        .filter_map(|d| {
            let (name, arg) = d.split_once(' ').unwrap_or((d, ""));
            match name {
                "sleep" => arg.trim().parse().ok().map(Directive::Sleep),
                "crash" => Some(Directive::Crash),
                "hang" => Some(Directive::Hang),
                "error" => Some(Directive::Error(arg.trim().to_string())),
                _ => None,
            }
        })
        .collect()
}

fn line_col(text: &str, offset: usize) -> (u32, u32) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() as u32 + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32;
    (line, col)
}

fn lint_error(rule: &str, snippet: &str) -> String {
    match rule {
        "namespace_qualification" => format!("unknown identifier '{snippet}'"),
        "missing_operator" => "function expected".to_string(),
        "chained_inequality" => "failed to synthesize\n  LE Prop".to_string(),
        "nat_division" => "exponent truncates to zero in ℕ".to_string(),
        other => format!("rejected by {other}"),
    }
}

const INFIX: &[&str] = &["+", "*", "/", "^", "∣", "%"];
const NOT_TERM: &[&str] = &[
    "+", "*", "/", "^", "∣", "%", "=", "<", ">", "≤", "≥", "<=", ">=", "≠", ")", "]", "}", ":=", ",", "∧", "∨", "→",
    "↔",
];

/// Offset of the first infix operator with no right operand.
fn dangling_operator(text: &str) -> Option<(usize, String)> {
    let toks = significant(&tokenize(text).ok()?);
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Symbol || !INFIX.contains(&t.text(text)) {
            continue;
        }
        match toks.get(i + 1) {
            Some(next) if !NOT_TERM.contains(&next.text(text)) => {}
            Some(next) => return Some((next.span.start, next.text(text).to_string())),
            None => return Some((text.len(), String::new())),
        }
    }
    None
}

/// Diagnostics the simulator produces for `cmd`.
pub fn simulate(cmd: &str) -> Simulated {
    let mut out = Simulated { directives: directives(cmd), ..Default::default() };
    for d in &out.directives {
        if let Directive::Error(text) = d {
            out.messages.push(ReplMessage::new("error", 1, 0, text.clone()));
        }
    }
    let (parsed, layout) = match parse_with_layout(cmd) {
        Ok(p) => p,
        Err(e) => {
            out.messages.push(ReplMessage::new(
                "error",
                e.line as u32,
                e.column as u32 - 1,
                format!("unexpected token; {}", e.message),
            ));
            return out;
        }
    };
    if let Some((at, tok)) = dangling_operator(cmd) {
        let (line, col) = line_col(cmd, at);
        out.messages.push(ReplMessage::new("error", line, col, format!("unexpected token '{tok}'; expected term")));
        return out;
    }
    for f in lint(cmd, None).findings.iter().filter(|f| f.severity == FindingSeverity::Fixable) {
        let (line, col) = line_col(cmd, f.span.start);
        out.messages.push(ReplMessage::new("error", line, col, lint_error(&f.rule_id, &cmd[f.span.start..f.span.end])));
    }
    let uses_sorry = match &parsed.terminator {
        Terminator::Sorry { .. } => true,
        Terminator::ProofBody(body) => body.contains("sorry") || body.contains("admit"),
        Terminator::Missing => {
            let (line, col) = line_col(cmd, cmd.len());
            out.messages.push(ReplMessage::new("error", line, col, "unexpected end of input; expected ':='"));
            false
        }
    };
    if uses_sorry && !out.messages.iter().any(|m| m.severity == "error") {
        let (line, col) = line_col(cmd, layout.keyword.start);
        out.messages.push(ReplMessage::new("warning", line, col, SORRY_WARNING));
        let (gl, gc) = line_col(cmd, layout.terminator.map_or(cmd.len(), |s| s.start));
        out.sorries.push(json!({
            "pos": {"line": gl, "column": gc},
            "endPos": {"line": gl, "column": gc + 5},
            "goal": format!("⊢ {}", parsed.goal_text),
            "proofState": 0,
        }));
    }
    out
}

/// Serves requests from `input` until it closes. Returns the exit code.
pub fn serve(args: &SimArgs, input: impl BufRead, mut output: impl Write) -> std::io::Result<i32> {
    let mut next_env = 0u32;
    let mut buf = String::new();
    let mut lines = input.lines();
    loop {
        let line = lines.next().transpose()?;
        let done = line.is_none();
        match line {
            Some(l) if !l.trim().is_empty() => {
                buf.push_str(&l);
                buf.push('\n');
                continue;
            }
            _ => {}
        }
        if !buf.trim().is_empty() {
            let response = match serde_json::from_str::<ReplRequest>(&buf) {
                Err(e) => json!({"message": format!("Could not parse JSON:\n{e}")}),
                Ok(req) => {
                    let sim = simulate(&req.cmd);
                    for d in &sim.directives {
                        match d {
                            Directive::Sleep(ms) => std::thread::sleep(Duration::from_millis(*ms)),
                            Directive::Crash => return Ok(3),
                            Directive::Hang => loop {
                                std::thread::sleep(Duration::from_secs(3600));
                            },
                            Directive::Error(_) => {}
                        }
                    }
                    if req.env.is_none() && req.cmd.trim_start().starts_with("import") {
                        std::thread::sleep(Duration::from_millis(args.startup_ms));
                        next_env = 1;
                        json!({"env": 0})
                    } else if req.env.is_some_and(|e| e >= next_env) {
                        json!({"message": "unknown environment."})
                    } else {
                        std::thread::sleep(Duration::from_millis(args.delay_ms));
                        let env = next_env;
                        next_env += 1;
                        let mut r = json!({"env": env});
                        if !sim.messages.is_empty() {
                            r["messages"] = serde_json::to_value(&sim.messages).expect("messages serialize");
                        }
                        if !sim.sorries.is_empty() {
                            r["sorries"] = json!(sim.sorries);
                        }
                        r
                    }
                }
            };
            writeln!(output, "{}\n", serde_json::to_string_pretty(&response).expect("json"))?;
            output.flush()?;
            buf.clear();
        }
        if done {
            return Ok(0);
        }
    }
}

/// Entry point shared by the standalone binary and the CLI subcommand.
pub fn run(args: &SimArgs) -> i32 {
    if args.version {
        println!("{}", args.tag);
        return 0;
    }
    let stdin = std::io::stdin();
    match serve(args, stdin.lock(), std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sim-repl: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> SimArgs {
        SimArgs { version: false, tag: DEFAULT_TAG.into(), delay_ms: 0, startup_ms: 0 }
    }

    #[test]
    fn header_then_commands() {
        let input = format!(
            "{}{}{}",
            ReplRequest { cmd: "import Mathlib".into(), env: None }.to_wire(),
            ReplRequest { cmd: "theorem t : 1 + 1 = 2 := by sorry".into(), env: Some(0) }.to_wire(),
            ReplRequest { cmd: "theorem t (x : ℕ) : x + = 2 := by sorry".into(), env: Some(0) }.to_wire(),
        );
        let mut out = Vec::new();
        assert_eq!(serve(&args(), input.as_bytes(), &mut out).unwrap(), 0);
        let values: Vec<serde_json::Value> =
            serde_json::Deserializer::from_slice(&out).into_iter().collect::<Result<_, _>>().unwrap();
        assert_eq!(values.len(), 3);
        assert_eq!(values[0], json!({"env": 0}));
        assert_eq!(values[1]["messages"][0]["data"], SORRY_WARNING);
        assert_eq!(values[1]["sorries"][0]["goal"], "⊢ 1 + 1 = 2");
        assert_eq!(values[2]["messages"][0]["severity"], "error");
        assert!(values[2]["messages"][0]["data"].as_str().unwrap().contains("expected term"));
    }

    #[test]
    fn directive_parsing() {
        let cmd = "theorem t : True := by sorry -- sim:sleep 80\n-- sim:error boom";
        assert_eq!(directives(cmd), vec![Directive::Sleep(80), Directive::Error("boom".into())]);
    }

    #[test]
    fn crash_directive_ends_session() {
        let input = format!(
            "{}{}",
            ReplRequest { cmd: "import Mathlib".into(), env: None }.to_wire(),
            ReplRequest { cmd: "theorem t : True := by sorry -- sim:crash".into(), env: Some(0) }.to_wire(),
        );
        let mut out = Vec::new();
        assert_eq!(serve(&args(), input.as_bytes(), &mut out).unwrap(), 3);
    }
}
