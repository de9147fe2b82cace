//! Reference embedder: signed feature hashing over lowercase alphanumeric
//! tokens. No model weights, bit-stable across platforms.

use super::{tokenize, Embedder, Embedding};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the token bytes.
fn fnv1a64(token: &str) -> u64 {
    let mut hash = FNV_OFFSET;
    for byte in token.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Feature-hashing embedder: each token lands in bucket `hash % dim` with
/// sign taken from hash bit 63; the accumulated vector is L2-normalized.
/// Empty token sets embed to the zero vector.
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, text: &str) -> Embedding {
        let mut raw = vec![0.0f64; self.dim];
        for token in tokenize(text) {
            let hash = fnv1a64(&token);
            let bucket = (hash % self.dim as u64) as usize;
            let sign = if hash >> 63 == 1 { -1.0 } else { 1.0 };
            raw[bucket] += sign;
        }
        Embedding::from_raw(raw)
    }

    fn dim(&self) -> usize {
        self.dim
    }
}
