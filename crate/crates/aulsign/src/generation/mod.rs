//! Text generation providers: a deterministic scripted replayer for offline
//! runs and tests, and a remote chat-completions client.

mod remote;
mod scripted;

pub use remote::{RemoteGenerator, RemoteGeneratorConfig};
pub use scripted::{ScriptEntry, ScriptedGenerator};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompting::PromptSpec;

/// Environment variable holding the generation API credential.
pub const LLM_API_KEY_VAR: &str = "AULSIGN_LLM_API_KEY";

#[derive(Debug, Error)]
pub enum GenError {
    #[error("credential environment variable {0} is not set")]
    AuthMissing(&'static str),
    #[error("no scripted response for prompt {fingerprint}")]
    ScriptMiss { fingerprint: String },
    #[error("output was cut off by the provider's token limit")]
    OutputTruncated,
    #[error("generation provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("script file {path:?} line {line}: {reason}")]
    Corrupt {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// One completed generation call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenExchange {
    pub prompt: PromptSpec,
    /// Provider output, verbatim.
    pub raw_output: String,
    pub provider_id: String,
    pub latency_ms: u64,
}

/// Stable fingerprint of a prompt: SHA-256 over the system text, an
/// unambiguous separator, and the user text. Scripted providers key their
/// responses on this, and traces record it.
pub fn prompt_fingerprint(prompt: &PromptSpec) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.system_text.as_bytes());
    hasher.update(b"\n\x00\n");
    hasher.update(prompt.user_text.as_bytes());
    to_hex(&hasher.finalize())
}

fn to_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// A source of generated text.
pub trait Generator: Send + Sync {
    fn provider_id(&self) -> String;

    fn generate(&self, prompt: &PromptSpec) -> Result<GenExchange, GenError>;
}

impl Generator for Box<dyn Generator> {
    fn provider_id(&self) -> String {
        (**self).provider_id()
    }

    fn generate(&self, prompt: &PromptSpec) -> Result<GenExchange, GenError> {
        (**self).generate(prompt)
    }
}
