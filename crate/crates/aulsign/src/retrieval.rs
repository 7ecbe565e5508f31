//! Retrieval of prompt context: similar training sentences and candidate
//! canonical forms for a given query, by exact cosine search.

use std::sync::Arc;

use thiserror::Error;

use crate::corpus::CorpusItem;
use crate::embedding::{Embedder, EmbeddingError, VectorIndex};
use crate::lexicon::{CanonicalToken, Lexicon};
use crate::text::join_segments;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("retrieval sizes must be at least 1")]
    InvalidConfig,
    #[error("corpus items have no canonical sequences attached")]
    MissingCanonicals,
    #[error("{which} index does not match the current data: {reason}")]
    IndexMismatch { which: &'static str, reason: String },
    #[error("{0}")]
    Embedding(#[from] EmbeddingError),
}

/// How much context to retrieve per query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetrievalConfig {
    /// Example sentences shown in the prompt.
    pub examples: usize,
    /// Candidate canonical forms shown in the prompt (spoken to sign only).
    pub candidates: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            examples: 20,
            candidates: 100,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(self) -> Result<Self, RetrievalError> {
        if self.examples == 0 || self.candidates == 0 {
            return Err(RetrievalError::InvalidConfig);
        }
        Ok(self)
    }
}

/// A retrieved training sentence with its similarity to the query.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredExample {
    pub id: String,
    pub spoken: String,
    pub canonicals: Vec<CanonicalToken>,
    /// The canonical sequence as one `" | "`-joined line.
    pub canonical_line: String,
    pub score: f32,
}

/// A retrieved vocabulary canonical form with its similarity to the query.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub canonical: String,
    pub score: f32,
}

/// Everything retrieved for one query, examples and candidates each ranked
/// best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RetrievedContext {
    pub examples: Vec<ScoredExample>,
    pub candidates: Vec<ScoredCandidate>,
}

/// Positions of items usable as spoken-side retrieval rows, with their
/// texts. Items with blank spoken text are skipped.
pub fn spoken_rows(items: &[CorpusItem]) -> (Vec<usize>, Vec<String>) {
    let mut positions = Vec::new();
    let mut texts = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if !item.spoken.trim().is_empty() {
            positions.push(i);
            texts.push(item.spoken.clone());
        }
    }
    (positions, texts)
}

/// Positions of items usable as canonical-sequence retrieval rows, with
/// their rendered lines. Requires attached canonical sequences; items whose
/// line is empty (no signs) are skipped.
pub fn canonical_line_rows(
    items: &[CorpusItem],
) -> Result<(Vec<usize>, Vec<String>), RetrievalError> {
    let mut positions = Vec::new();
    let mut texts = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let line = item
            .canonical_line()
            .ok_or(RetrievalError::MissingCanonicals)?;
        if !line.trim().is_empty() {
            positions.push(i);
            texts.push(line);
        }
    }
    Ok((positions, texts))
}

/// Holds the training items and the three search indexes (spoken sentences,
/// canonical-sequence lines, vocabulary canonical forms) plus the embedder
/// used for queries.
pub struct Retriever {
    items: Vec<CorpusItem>,
    spoken_positions: Vec<usize>,
    spoken_index: VectorIndex,
    line_positions: Vec<usize>,
    line_index: VectorIndex,
    canonical_index: VectorIndex,
    embedder: Arc<dyn Embedder>,
    config: RetrievalConfig,
}

impl Retriever {
    /// Embeds all rows and builds the three indexes.
    pub fn build(
        items: Vec<CorpusItem>,
        lexicon: &Lexicon,
        embedder: Arc<dyn Embedder>,
        config: RetrievalConfig,
    ) -> Result<Retriever, RetrievalError> {
        let config = config.validate()?;
        let (spoken_positions, spoken_texts) = spoken_rows(&items);
        let (line_positions, line_texts) = canonical_line_rows(&items)?;
        let canonical_texts: Vec<String> = lexicon
            .canonical_texts()
            .into_iter()
            .map(str::to_string)
            .collect();
        let spoken_index = VectorIndex::build(&embedder, spoken_texts)?;
        let line_index = VectorIndex::build(&embedder, line_texts)?;
        let canonical_index = VectorIndex::build(&embedder, canonical_texts)?;
        Ok(Retriever {
            items,
            spoken_positions,
            spoken_index,
            line_positions,
            line_index,
            canonical_index,
            embedder,
            config,
        })
    }

    /// Assembles a retriever around pre-built indexes (for example loaded
    /// from disk), verifying that each index was produced by the same
    /// provider and over exactly the texts the current data yields.
    pub fn from_indexes(
        items: Vec<CorpusItem>,
        lexicon: &Lexicon,
        embedder: Arc<dyn Embedder>,
        config: RetrievalConfig,
        spoken_index: VectorIndex,
        line_index: VectorIndex,
        canonical_index: VectorIndex,
    ) -> Result<Retriever, RetrievalError> {
        let config = config.validate()?;
        let provider = embedder.provider_id();
        let (spoken_positions, spoken_texts) = spoken_rows(&items);
        let (line_positions, line_texts) = canonical_line_rows(&items)?;
        let canonical_texts: Vec<String> = lexicon
            .canonical_texts()
            .into_iter()
            .map(str::to_string)
            .collect();
        for (which, index, expected) in [
            ("spoken", &spoken_index, &spoken_texts),
            ("canonical-sequence", &line_index, &line_texts),
            ("canonical-form", &canonical_index, &canonical_texts),
        ] {
            if index.provider_id() != provider {
                return Err(EmbeddingError::ProviderMismatch {
                    expected: provider,
                    found: index.provider_id().to_string(),
                }
                .into());
            }
            if index.texts() != expected.as_slice() {
                return Err(RetrievalError::IndexMismatch {
                    which,
                    reason: format!(
                        "index holds {} rows, data yields {}{}",
                        index.len(),
                        expected.len(),
                        if index.len() == expected.len() {
                            " (same count, different texts)"
                        } else {
                            ""
                        }
                    ),
                });
            }
        }
        Ok(Retriever {
            items,
            spoken_positions,
            spoken_index,
            line_positions,
            line_index,
            canonical_index,
            embedder,
            config,
        })
    }

    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn config(&self) -> RetrievalConfig {
        self.config
    }

    pub fn embedder(&self) -> Arc<dyn Embedder> {
        Arc::clone(&self.embedder)
    }

    /// The index over vocabulary canonical forms, shared with the mapper.
    pub fn canonical_index(&self) -> &VectorIndex {
        &self.canonical_index
    }

    /// Context for a spoken-language query: the most similar training
    /// sentences plus the most similar vocabulary canonical forms.
    pub fn for_spoken(&self, query: &str) -> Result<RetrievedContext, RetrievalError> {
        if query.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let vector = self.embedder.embed(query)?;
        let examples = self.examples_from(&self.spoken_index, &self.spoken_positions, &vector)?;
        let candidates = self
            .canonical_index
            .top_k(&vector, self.config.candidates)?
            .into_iter()
            .map(|h| ScoredCandidate {
                canonical: h.text,
                score: h.score,
            })
            .collect();
        Ok(RetrievedContext {
            examples,
            candidates,
        })
    }

    /// Context for a canonical-sequence query: the training sentences with
    /// the most similar canonical lines. No candidates: the sign-to-spoken
    /// direction has no vocabulary to choose from.
    pub fn for_canonicals(
        &self,
        tokens: &[CanonicalToken],
    ) -> Result<RetrievedContext, RetrievalError> {
        let query = join_segments(tokens.iter().map(CanonicalToken::as_str));
        if query.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let vector = self.embedder.embed(&query)?;
        let examples = self.examples_from(&self.line_index, &self.line_positions, &vector)?;
        Ok(RetrievedContext {
            examples,
            candidates: Vec::new(),
        })
    }

    fn examples_from(
        &self,
        index: &VectorIndex,
        positions: &[usize],
        vector: &crate::embedding::Embedding,
    ) -> Result<Vec<ScoredExample>, RetrievalError> {
        let hits = index.top_k(vector, self.config.examples)?;
        Ok(hits
            .into_iter()
            .map(|h| {
                let item = &self.items[positions[h.position]];
                ScoredExample {
                    id: item.id.clone(),
                    spoken: item.spoken.clone(),
                    canonicals: item.canonicals.clone().unwrap_or_default(),
                    canonical_line: item.canonical_line().unwrap_or_default(),
                    score: h.score,
                }
            })
            .collect())
    }
}
