//! Mapping generated pseudo-language descriptions back onto vocabulary
//! entries and concrete signs.
//!
//! Each description tries an exact match first (insensitive to casing and
//! whitespace runs); only descriptions without an exact hit are embedded and
//! resolved to the nearest canonical form by cosine similarity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{Embedder, EmbeddingError, VectorIndex};
use crate::fsw::SignSequence;
use crate::lexicon::{Lexicon, LexiconError};

#[derive(Debug, Error)]
pub enum MapperError {
    #[error("pseudo description {index} is empty")]
    EmptyPseudo { index: usize },
    #[error("canonical form {canonical:?} is in the index but not in the vocabulary")]
    LexiconInconsistency { canonical: String },
    #[error("{0}")]
    Embedding(#[from] EmbeddingError),
}

/// How a description was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    Embedding,
}

/// The resolution of one pseudo description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingOutcome {
    /// The description as produced by the generator.
    pub pseudo: String,
    /// The matched canonical form, or `None` when the best similarity fell
    /// below the configured floor.
    pub canonical: Option<String>,
    /// 1.0 for exact matches, best cosine similarity otherwise.
    pub score: f32,
    pub method: MatchMethod,
}

/// Resolves one description. See [`map_sequence`] for the batched variant
/// the pipeline uses.
pub fn map_description<E: Embedder + ?Sized>(
    pseudo: &str,
    canonical_index: &VectorIndex,
    lexicon: &Lexicon,
    embedder: &E,
    min_similarity: Option<f32>,
) -> Result<MappingOutcome, MapperError> {
    let mut out = map_sequence(
        std::slice::from_ref(&pseudo.to_string()),
        canonical_index,
        lexicon,
        embedder,
        min_similarity,
    )?;
    Ok(out.pop().expect("one outcome per pseudo"))
}

/// Resolves a sequence of descriptions in order. Descriptions with an exact
/// vocabulary match never touch the embedder; the rest are embedded in one
/// batch and matched to the highest-cosine canonical form, ties broken
/// toward the earlier index position. With a `min_similarity` floor, best
/// matches below the floor come back unmatched instead of wrong.
pub fn map_sequence<E: Embedder + ?Sized>(
    pseudos: &[String],
    canonical_index: &VectorIndex,
    lexicon: &Lexicon,
    embedder: &E,
    min_similarity: Option<f32>,
) -> Result<Vec<MappingOutcome>, MapperError> {
    let mut outcomes: Vec<Option<MappingOutcome>> = vec![None; pseudos.len()];
    let mut embed_positions: Vec<usize> = Vec::new();
    for (i, pseudo) in pseudos.iter().enumerate() {
        if pseudo.trim().is_empty() {
            return Err(MapperError::EmptyPseudo { index: i });
        }
        match lexicon.lookup_by_canonical(pseudo) {
            Ok(entry) => {
                outcomes[i] = Some(MappingOutcome {
                    pseudo: pseudo.clone(),
                    canonical: Some(entry.canonical.clone()),
                    score: 1.0,
                    method: MatchMethod::Exact,
                });
            }
            Err(LexiconError::NotFound { .. }) => embed_positions.push(i),
            Err(_) => unreachable!("lookup_by_canonical only fails with NotFound"),
        }
    }

    if !embed_positions.is_empty() {
        let texts: Vec<String> = embed_positions
            .iter()
            .map(|&i| pseudos[i].clone())
            .collect();
        let vectors = embedder.embed_batch(&texts)?;
        for (&i, vector) in embed_positions.iter().zip(&vectors) {
            let hit = canonical_index
                .top_k(vector, 1)?
                .pop()
                .expect("top_k(1) on a non-empty index yields a hit");
            let keep = min_similarity.is_none_or(|floor| hit.score >= floor);
            outcomes[i] = Some(MappingOutcome {
                pseudo: pseudos[i].clone(),
                canonical: keep.then_some(hit.text),
                score: hit.score,
                method: MatchMethod::Embedding,
            });
        }
    }

    Ok(outcomes
        .into_iter()
        .map(|o| o.expect("every slot filled"))
        .collect())
}

/// Turns mapped outcomes into the output sign sequence: one representative
/// sign per matched canonical form, in order. Unmatched outcomes are
/// skipped; their positions come back as diagnostics. A matched canonical
/// form missing from the vocabulary is an inconsistency between index and
/// lexicon and fails loudly.
pub fn emit_fsw(
    outcomes: &[MappingOutcome],
    lexicon: &Lexicon,
) -> Result<(SignSequence, Vec<usize>), MapperError> {
    let mut signs = Vec::new();
    let mut skipped = Vec::new();
    for (i, outcome) in outcomes.iter().enumerate() {
        match &outcome.canonical {
            Some(canonical) => {
                let entry = lexicon.lookup_by_canonical(canonical).map_err(|_| {
                    MapperError::LexiconInconsistency {
                        canonical: canonical.clone(),
                    }
                })?;
                signs.push(entry.representative.clone());
            }
            None => skipped.push(i),
        }
    }
    Ok((SignSequence(signs), skipped))
}
