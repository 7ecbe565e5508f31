//! Text embeddings and exact nearest-neighbour search.
//!
//! Providers implement [`Embedder`] and always return unit-length vectors,
//! so cosine similarity reduces to a dot product. The built-in
//! [`HashingEmbedder`] is fully offline and deterministic; the
//! [`RemoteEmbedder`] talks to an embeddings HTTP endpoint. A file-backed
//! [`CachedEmbedder`] avoids re-requesting texts that were embedded before.

mod cache;
mod hashing;
mod index;
mod remote;

pub use cache::CachedEmbedder;
pub use hashing::HashingEmbedder;
pub use index::{SearchHit, VectorIndex};
pub use remote::{RemoteEmbedder, RemoteEmbedderConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("text {text:?} produced a zero vector")]
    ZeroVector { text: String },
    #[error("vector length {got} does not match expected dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("index was built by provider {found:?} but {expected:?} is configured")]
    ProviderMismatch { expected: String, found: String },
    #[error("credential environment variable {0} is not set")]
    AuthMissing(&'static str),
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("index file {path:?} line {line}: {reason}")]
    Corrupt {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A unit-length embedding vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    /// Normalizes the components to unit length. Fails on zero or non-finite
    /// vectors.
    pub fn unit(components: Vec<f32>) -> Result<Embedding, EmbeddingError> {
        let norm = components
            .iter()
            .map(|c| f64::from(*c) * f64::from(*c))
            .sum::<f64>();
        let norm = norm.sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbeddingError::ZeroVector {
                text: String::new(),
            });
        }
        Ok(Embedding(
            components
                .into_iter()
                .map(|c| (f64::from(c) / norm) as f32)
                .collect(),
        ))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f32] {
        &self.0
    }
}

/// Cosine similarity of two vectors, clamped to [-1, 1]. Inputs are
/// re-normalized, so callers need not rely on them being unit length.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f32, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: a.dimension(),
            got: b.dimension(),
        });
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.0.iter().zip(&b.0) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0) as f32)
}

/// A deterministic-or-remote source of text embeddings.
pub trait Embedder: Send + Sync {
    /// Stable identifier of the provider and its parameters. Vectors from
    /// different provider ids are never comparable.
    fn provider_id(&self) -> String;

    /// Embeds a batch of texts, one unit vector per input, in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError>;

    /// Embeds one text.
    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        let mut out = self.embed_batch(std::slice::from_ref(&text.to_string()))?;
        out.pop().ok_or(EmbeddingError::CountMismatch {
            expected: 1,
            got: 0,
        })
    }
}

impl Embedder for Box<dyn Embedder> {
    fn provider_id(&self) -> String {
        (**self).provider_id()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        (**self).embed_batch(texts)
    }
}

impl Embedder for std::sync::Arc<dyn Embedder> {
    fn provider_id(&self) -> String {
        (**self).provider_id()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        (**self).embed_batch(texts)
    }
}
