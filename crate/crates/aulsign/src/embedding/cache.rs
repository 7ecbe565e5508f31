//! File-backed embedding cache, keyed by provider id and text content.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Embedder, Embedding, EmbeddingError};

const CACHE_FILE: &str = "embeddings.jsonl";

#[derive(Serialize, Deserialize)]
struct CacheRow {
    key: String,
    vector: Embedding,
}

struct CacheState {
    map: HashMap<String, Embedding>,
    writer: BufWriter<File>,
}

/// Wraps an embedder with an append-only JSONL cache. Hits never touch the
/// inner provider, which keeps remote runs cheap and repeatable; the cache
/// key covers the provider id, so one cache directory can serve several
/// providers without mixing vectors.
pub struct CachedEmbedder<E> {
    inner: E,
    provider_id: String,
    path: PathBuf,
    state: Mutex<CacheState>,
}

/// The cache key of one (provider, text) pair.
pub fn cache_key(provider_id: &str, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(provider_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(text.as_bytes());
    to_hex(&hasher.finalize())
}

fn to_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl<E: Embedder> CachedEmbedder<E> {
    /// Opens (or creates) `<dir>/embeddings.jsonl` and loads existing rows.
    /// Unreadable lines are skipped: a torn final write from an interrupted
    /// run only costs a cache miss.
    pub fn open(dir: &Path, inner: E) -> Result<Self, EmbeddingError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(CACHE_FILE);
        let mut map = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if let Ok(row) = serde_json::from_str::<CacheRow>(&line) {
                    map.insert(row.key, row.vector);
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(CachedEmbedder {
            provider_id: inner.provider_id(),
            inner,
            path,
            state: Mutex::new(CacheState {
                map,
                writer: BufWriter::new(file),
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of cached vectors.
    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn provider_id(&self) -> String {
        self.provider_id.clone()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        let keys: Vec<String> = texts
            .iter()
            .map(|t| cache_key(&self.provider_id, t))
            .collect();

        let mut results: Vec<Option<Embedding>> = vec![None; texts.len()];
        let mut missing: Vec<usize> = Vec::new();
        {
            let state = self.state.lock().expect("cache lock");
            for (i, key) in keys.iter().enumerate() {
                match state.map.get(key) {
                    Some(v) => results[i] = Some(v.clone()),
                    None => missing.push(i),
                }
            }
        }

        if !missing.is_empty() {
            let todo: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fresh = self.inner.embed_batch(&todo)?;
            if fresh.len() != todo.len() {
                return Err(EmbeddingError::CountMismatch {
                    expected: todo.len(),
                    got: fresh.len(),
                });
            }
            let mut state = self.state.lock().expect("cache lock");
            for (&i, vector) in missing.iter().zip(&fresh) {
                let row = CacheRow {
                    key: keys[i].clone(),
                    vector: vector.clone(),
                };
                serde_json::to_writer(&mut state.writer, &row).map_err(std::io::Error::other)?;
                state.writer.write_all(b"\n")?;
                state.map.insert(keys[i].clone(), vector.clone());
                results[i] = Some(vector.clone());
            }
            state.writer.flush()?;
        }

        Ok(results
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect())
    }
}
