//! Embedding provider backed by an HTTP embeddings endpoint.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Embedder, Embedding, EmbeddingError};
use crate::http::{post_json, HttpError, RetryPolicy};

/// Environment variable holding the embeddings API credential.
pub const EMBED_API_KEY_VAR: &str = "AULSIGN_EMBED_API_KEY";

#[derive(Clone, Debug)]
pub struct RemoteEmbedderConfig {
    /// Full URL of the embeddings endpoint.
    pub endpoint: String,
    /// Model name sent with every request.
    pub model: String,
    /// Maximum number of texts per request.
    pub batch_size: usize,
    /// Retries for transient failures (timeouts, connection errors, 429 and
    /// 5xx responses).
    pub max_retries: u32,
    /// Base backoff delay, doubled per retry.
    pub backoff: Duration,
    /// Per-request timeout.
    pub timeout: Duration,
}

impl Default for RemoteEmbedderConfig {
    fn default() -> Self {
        RemoteEmbedderConfig {
            endpoint: String::new(),
            model: String::new(),
            batch_size: 32,
            max_retries: 3,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(60),
        }
    }
}

/// Client for an embeddings endpoint speaking the common
/// `{"model", "input"}` to `{"data": [{"embedding": [...]}]}` convention.
/// A bare array-of-arrays response body is accepted too. Returned vectors
/// are re-normalized to unit length.
pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    api_key: String,
}

impl RemoteEmbedder {
    /// Reads the credential from the environment. Fails immediately when it
    /// is missing: no request is ever attempted without a key.
    pub fn new(config: RemoteEmbedderConfig) -> Result<Self, EmbeddingError> {
        let api_key = std::env::var(EMBED_API_KEY_VAR)
            .map_err(|_| EmbeddingError::AuthMissing(EMBED_API_KEY_VAR))?;
        if api_key.trim().is_empty() {
            return Err(EmbeddingError::AuthMissing(EMBED_API_KEY_VAR));
        }
        Ok(RemoteEmbedder { config, api_key })
    }

    fn request(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        let payload = json!({
            "model": self.config.model,
            "input": texts,
        });
        let policy = RetryPolicy {
            max_retries: self.config.max_retries,
            backoff: self.config.backoff,
            timeout: self.config.timeout,
        };
        let body = post_json(&self.config.endpoint, &self.api_key, &payload, &policy)
            .map_err(http_error)?;
        let parsed: EmbedResponse = serde_json::from_value(body)
            .map_err(|e| EmbeddingError::ProviderUnavailable(format!("bad response: {e}")))?;
        let mut rows = match parsed {
            EmbedResponse::Data { data } => {
                let mut data = data;
                // Providers usually echo input order; sort by index when
                // present to be safe.
                data.sort_by_key(|r| r.index.unwrap_or(usize::MAX));
                data.into_iter().map(|r| r.embedding).collect::<Vec<_>>()
            }
            EmbedResponse::Bare(rows) => rows,
        };
        if rows.len() != texts.len() {
            return Err(EmbeddingError::CountMismatch {
                expected: texts.len(),
                got: rows.len(),
            });
        }
        let mut out = Vec::with_capacity(rows.len());
        for (text, row) in texts.iter().zip(rows.drain(..)) {
            out.push(
                Embedding::unit(row)
                    .map_err(|_| EmbeddingError::ZeroVector { text: text.clone() })?,
            );
        }
        Ok(out)
    }
}

fn http_error(e: HttpError) -> EmbeddingError {
    EmbeddingError::ProviderUnavailable(e.to_string())
}

impl Embedder for RemoteEmbedder {
    fn provider_id(&self) -> String {
        format!("remote:{}", self.config.model)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        for t in texts {
            if t.trim().is_empty() {
                return Err(EmbeddingError::EmptyText);
            }
        }
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.config.batch_size.max(1)) {
            out.extend(self.request(chunk)?);
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbedResponse {
    Data { data: Vec<EmbedRow> },
    Bare(Vec<Vec<f32>>),
}

#[derive(Deserialize)]
struct EmbedRow {
    embedding: Vec<f32>,
    #[serde(default)]
    index: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testhttp;

    fn config(endpoint: String) -> RemoteEmbedderConfig {
        RemoteEmbedderConfig {
            endpoint,
            model: "test-embed".to_string(),
            batch_size: 2,
            max_retries: 1,
            backoff: Duration::from_millis(1),
            timeout: Duration::from_secs(5),
        }
    }

    /// Env manipulation is process-global, so the whole remote lifecycle
    /// lives in one test.
    #[test]
    fn auth_then_request_then_retry() {
        std::env::remove_var(EMBED_API_KEY_VAR);
        assert!(matches!(
            RemoteEmbedder::new(config("http://127.0.0.1:1/v1".to_string())),
            Err(EmbeddingError::AuthMissing(EMBED_API_KEY_VAR))
        ));

        std::env::set_var(EMBED_API_KEY_VAR, "sk-test");

        // One batch in the data-rows shape.
        let (url, server) = testhttp::serve(vec![testhttp::json_response(
            200,
            r#"{"data":[{"embedding":[3.0,4.0],"index":0},{"embedding":[0.0,2.0],"index":1}]}"#,
        )]);
        let embedder = RemoteEmbedder::new(config(url)).unwrap();
        let out = embedder
            .embed_batch(&["alpha".to_string(), "beta".to_string()])
            .unwrap();
        let requests = server.join().unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[0].components()[0] - 0.6).abs() < 1e-6, "normalized");
        let req = String::from_utf8_lossy(&requests[0]).to_string();
        assert!(req.contains("Bearer sk-test"), "credential header sent");
        assert!(req.contains("test-embed"), "model in payload");

        // Transient 500 then success; bare array shape.
        let (url, server) = testhttp::serve(vec![
            testhttp::json_response(500, r#"{"error":"flaky"}"#),
            testhttp::json_response(200, r#"[[1.0,0.0]]"#),
        ]);
        let embedder = RemoteEmbedder::new(config(url)).unwrap();
        let out = embedder.embed_batch(&["gamma".to_string()]).unwrap();
        assert_eq!(server.join().unwrap().len(), 2);
        assert_eq!(out[0].components(), &[1.0, 0.0]);

        // Non-retryable client error surfaces as unavailable.
        let (url, server) = testhttp::serve(vec![testhttp::json_response(
            400,
            r#"{"error":"bad request"}"#,
        )]);
        let embedder = RemoteEmbedder::new(config(url)).unwrap();
        assert!(matches!(
            embedder.embed_batch(&["delta".to_string()]),
            Err(EmbeddingError::ProviderUnavailable(_))
        ));
        server.join().unwrap();

        std::env::remove_var(EMBED_API_KEY_VAR);
    }
}
