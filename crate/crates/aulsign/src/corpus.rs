//! Parallel corpus handling: items pairing a spoken sentence with a sign
//! sequence, attachment of canonical description sequences, and the split
//! configurations used for training-data selection.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsw::{parse_sequence, FswError, SignSequence};
use crate::lexicon::{CanonicalToken, Lexicon};
use crate::text::join_segments;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("item {id:?}: invalid FSW: {source}")]
    InvalidFsw { id: String, source: FswError },
    #[error("duplicate item id {id:?}")]
    DuplicateId { id: String },
    #[error("corpus file {path:?} line {line}: {reason}")]
    Corrupt {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("sampled split needs {requested} items but only {available} pass the filter")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("split spec {spec:?}: {reason}")]
    BadSplitSpec { spec: String, reason: String },
    #[error("canonical sequences must be attached before filtering")]
    MissingCanonicals,
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// One parallel sentence: spoken text and its sign sequence, plus the
/// per-sign canonical description sequence once attached.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusItem {
    pub id: String,
    pub spoken: String,
    pub signs: SignSequence,
    /// One token per sign, in order. `None` until attached.
    pub canonicals: Option<Vec<CanonicalToken>>,
}

impl CorpusItem {
    /// The canonical sequence rendered as a single retrieval/prompt line,
    /// segments joined with `" | "`.
    pub fn canonical_line(&self) -> Option<String> {
        self.canonicals
            .as_ref()
            .map(|ts| join_segments(ts.iter().map(CanonicalToken::as_str)))
    }

    /// True when the canonical sequence is attached and fully known.
    pub fn fully_known(&self) -> bool {
        self.canonicals
            .as_ref()
            .is_some_and(|ts| ts.iter().all(CanonicalToken::is_known))
    }
}

/// Looks every sign of every item up in the vocabulary and stores the
/// resulting token sequence on the item. Signs outside the vocabulary
/// become the unknown marker; the sequence always has exactly one token per
/// sign.
pub fn attach_canonical_sequences(items: &mut [CorpusItem], lexicon: &Lexicon) {
    for item in items {
        let tokens = item
            .signs
            .signs()
            .iter()
            .map(|s| lexicon.token_for_sign(s))
            .collect();
        item.canonicals = Some(tokens);
    }
}

/// Which subset of the corpus a run trains on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SplitConfig {
    /// Every item.
    Full,
    /// Only items whose canonical sequence contains no unknown marker.
    Filtered,
    /// A uniform random subset of the filtered items, drawn without
    /// replacement with a fixed seed.
    Sampled { size: usize, seed: u64 },
}

impl FromStr for SplitConfig {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        let bad = |reason: &str| CorpusError::BadSplitSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let mut parts = s.split(':');
        let config = match parts.next().unwrap_or_default() {
            "full" => SplitConfig::Full,
            "filtered" => SplitConfig::Filtered,
            "sampled" => {
                let size = parts
                    .next()
                    .ok_or_else(|| bad("expected sampled:<size>:<seed>"))?
                    .parse::<usize>()
                    .map_err(|e| bad(&format!("size: {e}")))?;
                let seed = parts
                    .next()
                    .ok_or_else(|| bad("expected sampled:<size>:<seed>"))?
                    .parse::<u64>()
                    .map_err(|e| bad(&format!("seed: {e}")))?;
                SplitConfig::Sampled { size, seed }
            }
            other => return Err(bad(&format!("unknown mode {other:?}"))),
        };
        if parts.next().is_some() {
            return Err(bad("trailing fields"));
        }
        Ok(config)
    }
}

impl std::fmt::Display for SplitConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitConfig::Full => write!(f, "full"),
            SplitConfig::Filtered => write!(f, "filtered"),
            SplitConfig::Sampled { size, seed } => write!(f, "sampled:{size}:{seed}"),
        }
    }
}

/// Applies a split configuration. Item order is preserved: filtering keeps
/// relative order and sampling re-sorts the drawn items back into corpus
/// order. Filtering and sampling require attached canonical sequences.
pub fn apply_split(
    items: Vec<CorpusItem>,
    config: SplitConfig,
) -> Result<Vec<CorpusItem>, CorpusError> {
    match config {
        SplitConfig::Full => Ok(items),
        SplitConfig::Filtered => filtered(items),
        SplitConfig::Sampled { size, seed } => {
            let kept = filtered(items)?;
            if size > kept.len() {
                return Err(CorpusError::SampleTooLarge {
                    requested: size,
                    available: kept.len(),
                });
            }
            let mut indices: Vec<usize> = (0..kept.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (chosen, _) = indices.partial_shuffle(&mut rng, size);
            let mut chosen = chosen.to_vec();
            chosen.sort_unstable();
            let mut by_index: Vec<Option<CorpusItem>> = kept.into_iter().map(Some).collect();
            Ok(chosen
                .into_iter()
                .map(|i| by_index[i].take().expect("indices are distinct"))
                .collect())
        }
    }
}

fn filtered(items: Vec<CorpusItem>) -> Result<Vec<CorpusItem>, CorpusError> {
    if items.iter().any(|i| i.canonicals.is_none()) {
        return Err(CorpusError::MissingCanonicals);
    }
    Ok(items.into_iter().filter(CorpusItem::fully_known).collect())
}

#[derive(Serialize, Deserialize)]
struct CorpusRow {
    id: String,
    spoken: String,
    fsw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    canonical_sequence: Option<Vec<String>>,
}

/// Reads a corpus from JSONL (`id`, `spoken`, `fsw`, optional
/// `canonical_sequence`) or, when the path ends in `.tsv`, from tab-separated
/// columns `id`, `spoken`, `fsw`. Ids must be unique and the FSW must parse.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusItem>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let is_tsv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    let mut items = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: CorpusRow = if is_tsv {
            let mut cols = line.split('\t');
            CorpusRow {
                id: cols.next().unwrap_or_default().trim().to_string(),
                spoken: cols.next().unwrap_or_default().trim().to_string(),
                fsw: cols.next().unwrap_or_default().trim().to_string(),
                canonical_sequence: None,
            }
        } else {
            serde_json::from_str(&line).map_err(|e| CorpusError::Corrupt {
                path: path.display().to_string(),
                line: i + 1,
                reason: e.to_string(),
            })?
        };
        let id = if row.id.is_empty() {
            format!("{}:{}", path.display(), i + 1)
        } else {
            row.id
        };
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id });
        }
        let signs = parse_sequence(&row.fsw).map_err(|source| CorpusError::InvalidFsw {
            id: id.clone(),
            source,
        })?;
        let canonicals = row
            .canonical_sequence
            .map(|ts| ts.into_iter().map(CanonicalToken::from).collect());
        items.push(CorpusItem {
            id,
            spoken: row.spoken,
            signs,
            canonicals,
        });
    }
    Ok(items)
}

/// Writes a corpus as JSONL, including canonical sequences when attached.
pub fn write_corpus(items: &[CorpusItem], path: &Path) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        let row = CorpusRow {
            id: item.id.clone(),
            spoken: item.spoken.clone(),
            fsw: item.signs.to_string(),
            canonical_sequence: item
                .canonicals
                .as_ref()
                .map(|ts| ts.iter().map(|t| t.as_str().to_string()).collect()),
        };
        serde_json::to_writer(&mut w, &row).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
