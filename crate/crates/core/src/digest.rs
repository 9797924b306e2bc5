use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Digest of a value's JSON encoding. Struct fields serialize in declaration
/// order and maps should be `BTreeMap`, so the encoding is stable.
pub fn json_digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("value serializes to JSON");
    format!("sha256:{}", sha256_hex(bytes))
}
