//! Content digests for run manifests: SHA-256 over a git-style blob header.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// `sha256("blob <len>\0" ++ bytes)` as lowercase hex.
pub fn blob_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Digest of the compact JSON encoding of `value`.
pub fn json_digest<T: Serialize + ?Sized>(value: &T) -> String {
    blob_digest(&serde_json::to_vec(value).unwrap_or_default())
}

/// Digest of several fields, each framed as its own blob.
pub fn fields_digest(fields: &[&[f64]]) -> String {
    let mut h = Sha256::new();
    for f in fields {
        let bytes: Vec<u8> = f.iter().flat_map(|x| x.to_le_bytes()).collect();
        h.update(blob_digest(&bytes).as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub digest: String,
}

impl ManifestEntry {
    pub fn new(name: impl Into<String>, bytes: &[u8]) -> Self {
        Self { name: name.into(), bytes: bytes.len(), digest: blob_digest(bytes) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_git_object_framing() {
        // Object id of a blob in a SHA-256 git repository.
        assert_eq!(
            blob_digest(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
        assert_ne!(fields_digest(&[&[1.0], &[2.0]]), fields_digest(&[&[1.0, 2.0]]));
    }
}
