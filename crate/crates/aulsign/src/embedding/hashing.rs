//! Offline embedding provider based on signed character n-gram hashing.

use super::{Embedder, Embedding, EmbeddingError};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Hand-rolled so that bucket assignments are identical
/// across platforms and Rust releases, unlike the std hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Embeds text by hashing its character 2-, 3- and 4-grams into a fixed
/// number of signed buckets and L2-normalizing the result. Lowercases the
/// input and wraps it in boundary markers so that even one-character texts
/// produce features. Deterministic, fully offline, no vocabulary.
#[derive(Clone, Debug)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;
    const NGRAM_MIN: usize = 2;
    const NGRAM_MAX: usize = 4;
    const BOUNDARY: char = '\u{1}';

    pub fn new(dimension: usize) -> Result<Self, EmbeddingError> {
        if dimension == 0 {
            return Err(EmbeddingError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(HashingEmbedder { dimension })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_one(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::EmptyText);
        }
        let mut chars: Vec<char> = Vec::with_capacity(text.len() + 2);
        chars.push(Self::BOUNDARY);
        chars.extend(text.to_lowercase().chars());
        chars.push(Self::BOUNDARY);

        let mut acc = vec![0.0f32; self.dimension];
        let mut buf = String::new();
        for n in Self::NGRAM_MIN..=Self::NGRAM_MAX {
            if chars.len() < n {
                break;
            }
            for window in chars.windows(n) {
                buf.clear();
                buf.extend(window.iter());
                let h = fnv1a(buf.as_bytes());
                let bucket = (h % self.dimension as u64) as usize;
                let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
                acc[bucket] += sign;
            }
        }
        Embedding::unit(acc).map_err(|_| EmbeddingError::ZeroVector {
            text: text.to_string(),
        })
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder {
            dimension: Self::DEFAULT_DIMENSION,
        }
    }
}

impl Embedder for HashingEmbedder {
    fn provider_id(&self) -> String {
        format!("hashing:{}:fnv1a64", self.dimension)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}
