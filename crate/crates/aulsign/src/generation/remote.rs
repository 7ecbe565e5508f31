//! Generation provider backed by a chat-completions HTTP endpoint.

use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{GenError, GenExchange, Generator, LLM_API_KEY_VAR};
use crate::http::{post_json, HttpError, RetryPolicy};
use crate::prompting::PromptSpec;

#[derive(Clone, Debug)]
pub struct RemoteGeneratorConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    /// Model name sent with every request.
    pub model: String,
    /// Sampling temperature. Zero keeps runs as repeatable as the provider
    /// allows.
    pub temperature: f64,
    /// Response token cap forwarded to the provider, when set.
    pub max_output_tokens: Option<u32>,
    /// Retries for transient failures (timeouts, connection errors, 429 and
    /// 5xx responses).
    pub max_retries: u32,
    /// Base backoff delay, doubled per retry.
    pub backoff: Duration,
    /// Per-request timeout.
    pub timeout: Duration,
}

impl Default for RemoteGeneratorConfig {
    fn default() -> Self {
        RemoteGeneratorConfig {
            endpoint: String::new(),
            model: String::new(),
            temperature: 0.0,
            max_output_tokens: None,
            max_retries: 3,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(120),
        }
    }
}

/// Client for a chat-completions endpoint speaking the common
/// `{"model", "messages", ...}` to `{"choices": [{"message": ...}]}`
/// convention. The prompt's system and user texts become one message each.
pub struct RemoteGenerator {
    config: RemoteGeneratorConfig,
    api_key: String,
}

impl RemoteGenerator {
    /// Reads the credential from the environment. Fails immediately when it
    /// is missing: no request is ever attempted without a key.
    pub fn new(config: RemoteGeneratorConfig) -> Result<Self, GenError> {
        let api_key =
            std::env::var(LLM_API_KEY_VAR).map_err(|_| GenError::AuthMissing(LLM_API_KEY_VAR))?;
        if api_key.trim().is_empty() {
            return Err(GenError::AuthMissing(LLM_API_KEY_VAR));
        }
        Ok(RemoteGenerator { config, api_key })
    }
}

impl Generator for RemoteGenerator {
    fn provider_id(&self) -> String {
        format!("remote:{}", self.config.model)
    }

    fn generate(&self, prompt: &PromptSpec) -> Result<GenExchange, GenError> {
        let started = Instant::now();
        let mut payload = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        });
        if let Some(cap) = self.config.max_output_tokens {
            payload["max_tokens"] = json!(cap);
        }
        let policy = RetryPolicy {
            max_retries: self.config.max_retries,
            backoff: self.config.backoff,
            timeout: self.config.timeout,
        };
        let body = post_json(&self.config.endpoint, &self.api_key, &payload, &policy)
            .map_err(http_error)?;
        let parsed: ChatResponse = serde_json::from_value(body)
            .map_err(|e| GenError::ProviderUnavailable(format!("bad response: {e}")))?;
        let choice =
            parsed.choices.into_iter().next().ok_or_else(|| {
                GenError::ProviderUnavailable("response had no choices".to_string())
            })?;
        if choice.finish_reason.as_deref() == Some("length") {
            return Err(GenError::OutputTruncated);
        }
        let raw_output = choice.message.content.ok_or_else(|| {
            GenError::ProviderUnavailable("response had no message content".to_string())
        })?;
        Ok(GenExchange {
            prompt: prompt.clone(),
            raw_output,
            provider_id: self.provider_id(),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

fn http_error(e: HttpError) -> GenError {
    GenError::ProviderUnavailable(e.to_string())
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testhttp;
    use crate::Direction;

    fn config(endpoint: String) -> RemoteGeneratorConfig {
        RemoteGeneratorConfig {
            endpoint,
            model: "test-chat".to_string(),
            max_retries: 1,
            backoff: Duration::from_millis(1),
            timeout: Duration::from_secs(5),
            ..Default::default()
        }
    }

    fn prompt() -> PromptSpec {
        PromptSpec {
            direction: Direction::Text2Sign,
            system_text: "be terse".to_string(),
            user_text: "Input: hello".to_string(),
            example_count: 0,
            candidate_count: 0,
            template_version: "v1".to_string(),
        }
    }

    /// Env manipulation is process-global, so the whole remote lifecycle
    /// lives in one test.
    #[test]
    fn auth_then_request_then_failures() {
        std::env::remove_var(LLM_API_KEY_VAR);
        assert!(matches!(
            RemoteGenerator::new(config("http://127.0.0.1:1/stub".to_string())),
            Err(GenError::AuthMissing(LLM_API_KEY_VAR))
        ));

        std::env::set_var(LLM_API_KEY_VAR, "sk-chat");

        let (url, server) = testhttp::serve(vec![testhttp::json_response(
            200,
            r#"{"choices":[{"message":{"content":"hello | tree"},"finish_reason":"stop"}]}"#,
        )]);
        let gen = RemoteGenerator::new(config(url)).unwrap();
        let exchange = gen.generate(&prompt()).unwrap();
        assert_eq!(exchange.raw_output, "hello | tree");
        assert_eq!(exchange.provider_id, "remote:test-chat");
        let req = String::from_utf8_lossy(&server.join().unwrap()[0]).to_string();
        assert!(req.contains("Bearer sk-chat"));
        let body: serde_json::Value =
            serde_json::from_str(req.split("\r\n\r\n").nth(1).unwrap()).unwrap();
        assert_eq!(body["model"], "test-chat");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["content"], "be terse");
        assert_eq!(body["messages"][1]["role"], "user");

        // Truncated output is an explicit error, not silent bad data.
        let (url, server) = testhttp::serve(vec![testhttp::json_response(
            200,
            r#"{"choices":[{"message":{"content":"hel"},"finish_reason":"length"}]}"#,
        )]);
        let gen = RemoteGenerator::new(config(url)).unwrap();
        assert!(matches!(
            gen.generate(&prompt()),
            Err(GenError::OutputTruncated)
        ));
        server.join().unwrap();

        // Retry a 429, then succeed.
        let (url, server) = testhttp::serve(vec![
            testhttp::json_response(429, r#"{"error":"slow down"}"#),
            testhttp::json_response(
                200,
                r#"{"choices":[{"message":{"content":"ok"},"finish_reason":"stop"}]}"#,
            ),
        ]);
        let gen = RemoteGenerator::new(config(url)).unwrap();
        assert_eq!(gen.generate(&prompt()).unwrap().raw_output, "ok");
        assert_eq!(server.join().unwrap().len(), 2);

        std::env::remove_var(LLM_API_KEY_VAR);
    }
}
