//! Minimal JSON-over-HTTP POST with bounded retries, shared by the remote
//! embedding and generation providers.

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub(crate) enum HttpError {
    #[error("endpoint returned status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("unreadable response body: {0}")]
    BadResponse(String),
}

#[derive(Clone, Debug)]
pub(crate) struct RetryPolicy {
    pub max_retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

fn transient(code: u16) -> bool {
    code == 429 || (500..=599).contains(&code)
}

/// Posts `payload` with a bearer credential and parses the JSON response.
/// Transport failures, 429s and 5xx responses are retried with exponential
/// backoff up to `max_retries` times; other non-2xx statuses fail at once.
pub(crate) fn post_json(
    url: &str,
    api_key: &str,
    payload: &serde_json::Value,
    policy: &RetryPolicy,
) -> Result<serde_json::Value, HttpError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(policy.timeout))
        .http_status_as_error(false)
        .build()
        .into();

    let mut attempt = 0u32;
    loop {
        let delay = policy.backoff.saturating_mul(2u32.saturating_pow(attempt));
        let outcome = agent
            .post(url)
            .header("Authorization", format!("Bearer {api_key}"))
            .send_json(payload);
        match outcome {
            Ok(mut resp) => {
                let code = resp.status().as_u16();
                if (200..300).contains(&code) {
                    return resp
                        .body_mut()
                        .read_json::<serde_json::Value>()
                        .map_err(|e| HttpError::BadResponse(e.to_string()));
                }
                if transient(code) && attempt < policy.max_retries {
                    std::thread::sleep(delay);
                    attempt += 1;
                    continue;
                }
                let body = resp.body_mut().read_to_string().unwrap_or_default();
                return Err(HttpError::Status { code, body });
            }
            Err(e) => {
                if attempt < policy.max_retries {
                    std::thread::sleep(delay);
                    attempt += 1;
                    continue;
                }
                return Err(HttpError::Transport(e.to_string()));
            }
        }
    }
}
