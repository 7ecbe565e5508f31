//! Declarative run configuration.
//!
//! A `RunConfig` captures everything a run needs except credentials: paths,
//! provider choices, retrieval depth, and prompt knobs. It loads from TOML,
//! command-line flags override file values, and the effective configuration
//! is written next to a run's outputs so the run can be replayed. API keys
//! are read from the environment by the providers themselves and never
//! appear in a config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{
    CachedEmbedder, Embedder, EmbeddingError, HashingEmbedder, RemoteEmbedder, RemoteEmbedderConfig,
};
use crate::generation::{
    GenError, Generator, RemoteGenerator, RemoteGeneratorConfig, ScriptedGenerator,
};
use crate::prompting::Language;
use crate::retrieval::RetrievalConfig;
use crate::Direction;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("{0}")]
    Render(#[from] toml::ser::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

fn default_dimension() -> usize {
    HashingEmbedder::DEFAULT_DIMENSION
}

fn default_batch_size() -> usize {
    RemoteEmbedderConfig::default().batch_size
}

fn default_retries() -> u32 {
    RemoteEmbedderConfig::default().max_retries
}

fn default_embed_timeout_ms() -> u64 {
    RemoteEmbedderConfig::default().timeout.as_millis() as u64
}

fn default_gen_timeout_ms() -> u64 {
    RemoteGeneratorConfig::default().timeout.as_millis() as u64
}

/// Embedding backend selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "snake_case")]
pub enum EmbedderChoice {
    /// Deterministic offline character n-gram feature hashing.
    Hashing {
        #[serde(default = "default_dimension")]
        dimension: usize,
    },
    /// Embeddings endpoint speaking the common JSON protocol.
    Remote {
        endpoint: String,
        model: String,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
        #[serde(default = "default_retries")]
        max_retries: u32,
        #[serde(default = "default_embed_timeout_ms")]
        timeout_ms: u64,
    },
}

impl Default for EmbedderChoice {
    fn default() -> Self {
        EmbedderChoice::Hashing {
            dimension: HashingEmbedder::DEFAULT_DIMENSION,
        }
    }
}

impl EmbedderChoice {
    /// Constructs the embedder, wrapped in the persistent cache when a
    /// cache directory is given. Remote construction fails fast when the
    /// key environment variable is absent, before any request is made.
    pub fn build(&self, cache_dir: Option<&Path>) -> Result<Arc<dyn Embedder>, EmbeddingError> {
        let inner: Arc<dyn Embedder> = match self {
            EmbedderChoice::Hashing { dimension } => Arc::new(HashingEmbedder::new(*dimension)?),
            EmbedderChoice::Remote {
                endpoint,
                model,
                batch_size,
                max_retries,
                timeout_ms,
            } => Arc::new(RemoteEmbedder::new(RemoteEmbedderConfig {
                endpoint: endpoint.clone(),
                model: model.clone(),
                batch_size: *batch_size,
                max_retries: *max_retries,
                timeout: Duration::from_millis(*timeout_ms),
                ..RemoteEmbedderConfig::default()
            })?),
        };
        Ok(match cache_dir {
            Some(dir) => Arc::new(CachedEmbedder::open(dir, inner)?),
            None => inner,
        })
    }
}

/// Generation backend selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "snake_case")]
pub enum GeneratorChoice {
    /// Replays canned responses keyed by prompt fingerprint; fully offline.
    Scripted { script: PathBuf },
    /// Chat-completions endpoint.
    Remote {
        endpoint: String,
        model: String,
        #[serde(default)]
        temperature: f64,
        #[serde(default)]
        max_output_tokens: Option<u32>,
        #[serde(default = "default_retries")]
        max_retries: u32,
        #[serde(default = "default_gen_timeout_ms")]
        timeout_ms: u64,
    },
}

impl GeneratorChoice {
    /// Constructs the generator. Remote construction fails fast when the
    /// key environment variable is absent, before any request is made.
    pub fn build(&self) -> Result<Box<dyn Generator>, GenError> {
        match self {
            GeneratorChoice::Scripted { script } => {
                Ok(Box::new(ScriptedGenerator::from_path(script)?))
            }
            GeneratorChoice::Remote {
                endpoint,
                model,
                temperature,
                max_output_tokens,
                max_retries,
                timeout_ms,
            } => Ok(Box::new(RemoteGenerator::new(RemoteGeneratorConfig {
                endpoint: endpoint.clone(),
                model: model.clone(),
                temperature: *temperature,
                max_output_tokens: *max_output_tokens,
                max_retries: *max_retries,
                timeout: Duration::from_millis(*timeout_ms),
                ..RemoteGeneratorConfig::default()
            })?)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub lexicon: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// Decomposition rules file; the built-in rules for the configured
    /// language apply when unset.
    pub rules: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub trace_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSettings {
    pub examples: usize,
    pub candidates: usize,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        let base = RetrievalConfig::default();
        RetrievalSettings {
            examples: base.examples,
            candidates: base.candidates,
        }
    }
}

impl From<RetrievalSettings> for RetrievalConfig {
    fn from(s: RetrievalSettings) -> RetrievalConfig {
        RetrievalConfig {
            examples: s.examples,
            candidates: s.candidates,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingSettings {
    /// Cosine floor for the mapper; descriptions scoring below stay
    /// unmatched. Unset means the argmax always wins.
    pub min_similarity: Option<f32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSettings {
    pub language: Language,
    /// Prompt size cap in bytes; candidates, then examples, are shed to fit.
    pub byte_budget: Option<usize>,
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings {
            language: Language::En,
            byte_budget: None,
        }
    }
}

/// One run's full configuration, minus credentials.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub direction: Option<Direction>,
    /// Corpus split in the `preprocess` notation: `full`, `filtered`, or
    /// `sampled:N:SEED`.
    pub split: Option<String>,
    pub paths: PathsConfig,
    pub embedding: EmbedderChoice,
    pub generation: Option<GeneratorChoice>,
    pub retrieval: RetrievalSettings,
    pub mapping: MappingSettings,
    pub prompt: PromptSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let text = self.to_toml()?;
        std::fs::write(path, text).map_err(|source| ConfigError::Write {
            path: path.display().to_string(),
            source,
        })
    }
}
