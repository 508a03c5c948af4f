//! Deterministic seed derivation.
//!
//! Every randomized subsystem derives its own rng seed from a master seed
//! plus a text label (and optionally an item index or byte payload) by
//! hashing with SHA-256 and truncating. Independent subsystems therefore
//! never share an rng stream, adding a stage never perturbs another stage's
//! randomness, and per-item seeds make parallel execution order-independent.

use sha2::{Digest, Sha256};

fn truncate_to_u64(digest: &[u8]) -> u64 {
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Derive a child seed for the subsystem named by `label`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(label.as_bytes());
    truncate_to_u64(&hasher.finalize())
}

/// Derive a child seed for item `index` within the subsystem named by `label`.
pub fn derive_seed_indexed(master: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(label.as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    truncate_to_u64(&hasher.finalize())
}

/// Derive a child seed from a label plus an arbitrary byte payload.
///
/// Used where the "item" has no natural index, e.g. the sorted document-id
/// list of an extraction call or the printed form of an entity pair.
pub fn derive_seed_bytes(master: u64, label: &str, payload: &[u8]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(label.as_bytes());
    hasher.update([0u8]);
    hasher.update(payload);
    truncate_to_u64(&hasher.finalize())
}

/// Hex-encoded SHA-256 of a byte string; used for file digests in manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
