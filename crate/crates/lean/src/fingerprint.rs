//! Dedup digests over the significant token stream.
//!
//! The theorem name, keyword, terminator, comments and layout do not
//! contribute. Binder groups are expanded to one entry per name, so
//! `(a b : ℝ)` and `(a : ℝ) (b : ℝ)` hash the same.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::parse::{parse_statement, BinderKind};
use crate::token::{collapse_whitespace, significant, tokenize};

const VERSION_PREFIX: &str = "fp1:";
const RAW_PREFIX: &str = "raw:";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub digest: String,
    /// The text did not parse and the digest covers the raw text only.
    pub fallback: bool,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digest)
    }
}

pub fn canonical_fingerprint(text: &str) -> Fingerprint {
    match parse_statement(text) {
        Ok(parsed) => {
            let mut h = Sha256::new();
            for b in &parsed.binders {
                let kind = match b.kind {
                    BinderKind::Explicit => "(",
                    BinderKind::Implicit => "{",
                    BinderKind::Instance => "[",
                };
                let type_tokens = token_texts(&b.type_text);
                let names: Vec<&str> =
                    if b.names.is_empty() { vec![""] } else { b.names.iter().map(String::as_str).collect() };
                for name in names {
                    feed(&mut h, kind);
                    feed(&mut h, name);
                    feed(&mut h, ":");
                    for t in &type_tokens {
                        feed(&mut h, t);
                    }
                }
            }
            feed(&mut h, "⊢");
            for t in token_texts(&parsed.goal_text) {
                feed(&mut h, &t);
            }
            Fingerprint { digest: format!("{VERSION_PREFIX}{}", hex::encode(h.finalize())), fallback: false }
        }
        Err(_) => {
            let collapsed =
                collapse_whitespace(text).unwrap_or_else(|_| text.split_whitespace().collect::<Vec<_>>().join(" "));
            let digest = hex::encode(Sha256::digest(collapsed.as_bytes()));
            Fingerprint { digest: format!("{RAW_PREFIX}{digest}"), fallback: true }
        }
    }
}

/// Length-prefixed so token boundaries cannot be forged by concatenation.
fn feed(h: &mut Sha256, token: &str) {
    h.update((token.len() as u64).to_le_bytes());
    h.update(token.as_bytes());
}

fn token_texts(text: &str) -> Vec<String> {
    match tokenize(text) {
        Ok(toks) => significant(&toks).iter().map(|t| t.text(text).to_string()).collect(),
        Err(_) => text.split_whitespace().map(String::from).collect(),
    }
}
