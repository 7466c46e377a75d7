use serde::Serialize;
use sha2::{Digest, Sha256};

/// Compact JSON bytes. Struct fields serialize in declaration order and maps
/// are `BTreeMap`s, so equal values always produce equal bytes.
pub fn canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("value serializes to JSON")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn canonical_hash<T: Serialize + ?Sized>(value: &T) -> String {
    sha256_hex(&canonical_bytes(value))
}
