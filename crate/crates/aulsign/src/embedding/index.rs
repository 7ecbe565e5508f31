//! Exact brute-force nearest-neighbour index over embedded texts.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{cosine_similarity, Embedder, Embedding, EmbeddingError};

/// One ranked search result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    /// Insertion position of the text in the index.
    pub position: usize,
    pub text: String,
    pub score: f32,
}

/// Texts with their embeddings, searched by exhaustive cosine scan. Exact
/// by construction: every query scores every row.
#[derive(Clone, Debug)]
pub struct VectorIndex {
    provider_id: String,
    texts: Vec<String>,
    vectors: Vec<Embedding>,
}

impl VectorIndex {
    /// Builds an index from parallel texts and vectors. Vector dimensions
    /// must agree; rows keep their given order.
    pub fn new(
        provider_id: String,
        texts: Vec<String>,
        vectors: Vec<Embedding>,
    ) -> Result<VectorIndex, EmbeddingError> {
        if texts.len() != vectors.len() {
            return Err(EmbeddingError::CountMismatch {
                expected: texts.len(),
                got: vectors.len(),
            });
        }
        if let Some(first) = vectors.first() {
            let expected = first.dimension();
            for v in &vectors {
                if v.dimension() != expected {
                    return Err(EmbeddingError::DimensionMismatch {
                        expected,
                        got: v.dimension(),
                    });
                }
            }
        }
        Ok(VectorIndex {
            provider_id,
            texts,
            vectors,
        })
    }

    /// Embeds `texts` with `embedder` and builds the index.
    pub fn build<E: Embedder + ?Sized>(
        embedder: &E,
        texts: Vec<String>,
    ) -> Result<VectorIndex, EmbeddingError> {
        let vectors = embedder.embed_batch(&texts)?;
        VectorIndex::new(embedder.provider_id(), texts, vectors)
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn text(&self, position: usize) -> &str {
        &self.texts[position]
    }

    /// The `k` most cosine-similar rows, highest score first. Ties are
    /// broken toward the earlier insertion position, so results are fully
    /// deterministic. Returns fewer than `k` hits only when the index is
    /// smaller than `k`.
    pub fn top_k(&self, query: &Embedding, k: usize) -> Result<Vec<SearchHit>, EmbeddingError> {
        if k == 0 {
            return Err(EmbeddingError::InvalidK);
        }
        if self.is_empty() {
            return Err(EmbeddingError::EmptyIndex);
        }
        let mut scored: Vec<(usize, f32)> = Vec::with_capacity(self.len());
        for (position, vector) in self.vectors.iter().enumerate() {
            scored.push((position, cosine_similarity(query, vector)?));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(position, score)| SearchHit {
                position,
                text: self.texts[position].clone(),
                score,
            })
            .collect())
    }

    /// Writes the index as JSONL: a header line with the provider id and
    /// row count, then one `{text, vector}` line per row.
    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let mut w = BufWriter::new(File::create(path)?);
        let to_io = |e: serde_json::Error| std::io::Error::other(e);
        let header = IndexHeader {
            provider_id: self.provider_id.clone(),
            rows: self.len(),
        };
        serde_json::to_writer(&mut w, &header).map_err(to_io)?;
        w.write_all(b"\n")?;
        for (text, vector) in self.texts.iter().zip(&self.vectors) {
            let row = IndexRow {
                text: text.clone(),
                vector: vector.clone(),
            };
            serde_json::to_writer(&mut w, &row).map_err(to_io)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads an index written by [`VectorIndex::save`]. When
    /// `expected_provider` is given, a provider mismatch is an error: the
    /// stored vectors would not be comparable with freshly embedded queries.
    pub fn load(
        path: &Path,
        expected_provider: Option<&str>,
    ) -> Result<VectorIndex, EmbeddingError> {
        let corrupt = |line: usize, reason: String| EmbeddingError::Corrupt {
            path: path.display().to_string(),
            line,
            reason,
        };
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header: IndexHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?).map_err(|e| corrupt(1, e.to_string()))?,
            None => return Err(corrupt(1, "missing header".to_string())),
        };
        if let Some(expected) = expected_provider {
            if header.provider_id != expected {
                return Err(EmbeddingError::ProviderMismatch {
                    expected: expected.to_string(),
                    found: header.provider_id,
                });
            }
        }
        let mut texts = Vec::with_capacity(header.rows);
        let mut vectors = Vec::with_capacity(header.rows);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: IndexRow =
                serde_json::from_str(&line).map_err(|e| corrupt(i + 2, e.to_string()))?;
            texts.push(row.text);
            vectors.push(row.vector);
        }
        if texts.len() != header.rows {
            return Err(corrupt(
                1,
                format!("header says {} rows, file has {}", header.rows, texts.len()),
            ));
        }
        VectorIndex::new(header.provider_id, texts, vectors)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    provider_id: String,
    rows: usize,
}

#[derive(Serialize, Deserialize)]
struct IndexRow {
    text: String,
    vector: Embedding,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashingEmbedder;

    fn stub(vectors: Vec<Vec<f32>>) -> VectorIndex {
        let texts = (0..vectors.len()).map(|i| format!("t{i}")).collect();
        VectorIndex::new(
            "stub".to_string(),
            texts,
            vectors.into_iter().map(Embedding).collect(),
        )
        .unwrap()
    }

    #[test]
    fn ranks_by_similarity() {
        let index = stub(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.7, 0.7],
            vec![-1.0, 0.0],
        ]);
        let hits = index.top_k(&Embedding(vec![1.0, 0.0]), 3).unwrap();
        let positions: Vec<usize> = hits.iter().map(|h| h.position).collect();
        assert_eq!(positions, vec![0, 2, 1]);
        assert_eq!(hits[0].score, 1.0);
        assert_eq!(hits[0].text, "t0");
    }

    #[test]
    fn ties_break_by_position() {
        let index = stub(vec![
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![1.0, 0.0],
        ]);
        let hits = index.top_k(&Embedding(vec![1.0, 0.0]), 4).unwrap();
        let positions: Vec<usize> = hits.iter().map(|h| h.position).collect();
        assert_eq!(positions, vec![1, 2, 3, 0]);
    }

    #[test]
    fn k_larger_than_index_returns_all() {
        let index = stub(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(
            index.top_k(&Embedding(vec![1.0, 0.0]), 10).unwrap().len(),
            2
        );
    }

    #[test]
    fn rejects_empty_index_and_zero_k() {
        let index = stub(vec![]);
        assert!(matches!(
            index.top_k(&Embedding(vec![1.0]), 1),
            Err(EmbeddingError::EmptyIndex)
        ));
        let index = stub(vec![vec![1.0]]);
        assert!(matches!(
            index.top_k(&Embedding(vec![1.0]), 0),
            Err(EmbeddingError::InvalidK)
        ));
    }

    #[test]
    fn rejects_mixed_dimensions() {
        let out = VectorIndex::new(
            "stub".to_string(),
            vec!["a".to_string(), "b".to_string()],
            vec![Embedding(vec![1.0]), Embedding(vec![1.0, 0.0])],
        );
        assert!(matches!(
            out,
            Err(EmbeddingError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let embedder = HashingEmbedder::new(32).unwrap();
        let texts: Vec<String> = ["red house", "green tree", "blue sky"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let index = VectorIndex::build(&embedder, texts.clone()).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.jsonl");
        index.save(&path).unwrap();

        let loaded = VectorIndex::load(&path, Some("hashing:32:fnv1a64")).unwrap();
        assert_eq!(loaded.texts(), texts.as_slice());
        let q = embedder.embed("a reddish house").unwrap();
        assert_eq!(index.top_k(&q, 2).unwrap(), loaded.top_k(&q, 2).unwrap());

        assert!(matches!(
            VectorIndex::load(&path, Some("hashing:64:fnv1a64")).unwrap_err(),
            EmbeddingError::ProviderMismatch { .. }
        ));
    }
}
