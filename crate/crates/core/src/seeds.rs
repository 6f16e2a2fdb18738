//! Independent random streams keyed off the master seed.
//!
//! Each consumer derives its own seed from `(master, stream, path)`, so
//! turning one feature on never shifts another feature's draws.

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Schedule,
    Mutation,
    Jitter,
    Retry,
    Mock,
}

impl Stream {
    fn label(self) -> &'static [u8] {
        match self {
            Stream::Schedule => b"schedule",
            Stream::Mutation => b"mutation",
            Stream::Jitter => b"jitter",
            Stream::Retry => b"retry",
            Stream::Mock => b"mock",
        }
    }
}

pub fn derive_seed(master: u64, stream: Stream, path: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(stream.label());
    for p in path {
        hasher.update(p.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Stable 64-bit digest of a string, for keying streams by text.
pub fn text_key(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
