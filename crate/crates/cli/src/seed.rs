//! Per-cell seeds derived by hashing, so adding a dataset, β value or method
//! to a sweep never moves the random streams of the others.

use sha2::{Digest, Sha256};

/// One component of a seed derivation path.
#[derive(Debug, Clone, Copy)]
pub enum Part<'a> {
    Str(&'a str),
    U64(u64),
}

pub fn derive(base: u64, parts: &[Part<'_>]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for part in parts {
        // length-prefixed so ("ab", "c") and ("a", "bc") differ
        match part {
            Part::Str(s) => {
                hasher.update([0u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
            Part::U64(v) => {
                hasher.update([1u8]);
                hasher.update(v.to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}
