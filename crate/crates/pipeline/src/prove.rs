//! Whole-proof sampling against the checker.

use forge_core::{pass_rate, CompileKind, PassAtK};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::stages::Stages;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofSearch {
    pub statement_id: String,
    pub solved: bool,
    /// 1-based index of the proof that checked.
    pub winning_index: Option<u32>,
    /// Proof checks sent to the prover.
    pub attempts: u32,
    /// Verdict kind of every failed attempt, in order.
    pub failures: Vec<CompileKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof: Option<String>,
    /// Set when the search stopped early on an environment error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub retryable: bool,
}

/// Samples up to `k` proofs for a statement that elaborates with `sorry`
/// and checks them in order, stopping at the first that verifies.
pub fn proof_search(stages: &Stages, statement_id: &str, statement: &str, k: u32, temperature: f64) -> ProofSearch {
    let mut out = ProofSearch { statement_id: statement_id.to_string(), ..Default::default() };
    if k == 0 {
        return out;
    }
    let proofs = match stages.gateways.prove.prove(&[statement_id], statement, k, temperature) {
        Ok(p) => p,
        Err(e) => {
            out.retryable = e.is_retryable();
            out.error = Some(e.to_string());
            return out;
        }
    };
    for (i, proof) in (1..=k).zip(proofs) {
        out.attempts += 1;
        match stages.checker.check_proof(statement, &proof) {
            Ok(v) if v.kind == CompileKind::ProofPass => {
                out.solved = true;
                out.winning_index = Some(i);
                out.proof = Some(proof);
                break;
            }
            Ok(v) => out.failures.push(v.kind),
            Err(e) => {
                out.retryable = true;
                out.error = Some(e.to_string());
                break;
            }
        }
    }
    out
}

/// pass@k over a set of searches.
pub fn corpus_pass_rate(results: &[ProofSearch], k: u32) -> Result<PassAtK, PipelineError> {
    let solved = results.iter().filter(|r| r.solved).count() as u64;
    Ok(pass_rate(solved, results.len() as u64, k)?)
}
