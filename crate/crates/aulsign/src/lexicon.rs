//! The sign vocabulary: one entry per sign equivalence class, each carrying
//! a representative FSW form and a unique textual *canonical form* built
//! from the descriptions observed in the training data.
//!
//! Canonical forms are the pseudo-language the translation pipeline works
//! in: prompts show them, generated output is parsed into them, and the
//! mapper resolves them back to concrete signs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsw::{parse_sign, EquivalenceKey, FswError, Sign};
use crate::text::{normalize_text, UNKNOWN_TOKEN};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("record {source_id:?}: {reason}")]
    InvalidRecord { source_id: String, reason: String },
    #[error("record {source_id:?}: invalid FSW: {source}")]
    InvalidFsw { source_id: String, source: FswError },
    #[error("equivalence class {key} (first seen in record {source_id:?}) has no descriptions")]
    EmptyDescriptions { key: String, source_id: String },
    #[error("no vocabulary entry with canonical form {text:?}")]
    NotFound { text: String },
    #[error("vocabulary file {path:?} line {line}: {reason}")]
    Corrupt {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// One sign as it appears in the raw training data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSignRecord {
    /// FSW text of exactly one sign.
    pub fsw: String,
    /// Free-text descriptions attached to this occurrence.
    #[serde(default)]
    pub descriptions: Vec<String>,
    /// Identifier of the originating row, for error messages.
    #[serde(default)]
    pub source_id: String,
    /// Pre-assigned canonical form, for hand-made vocabularies. When present
    /// it takes priority over descriptions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<String>,
}

/// A pseudo-language token: the canonical form of a known vocabulary entry,
/// or the reserved unknown marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum CanonicalToken {
    Known(String),
    Unknown,
}

impl CanonicalToken {
    pub fn as_str(&self) -> &str {
        match self {
            CanonicalToken::Known(s) => s,
            CanonicalToken::Unknown => UNKNOWN_TOKEN,
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, CanonicalToken::Known(_))
    }
}

impl From<String> for CanonicalToken {
    fn from(s: String) -> Self {
        if s == UNKNOWN_TOKEN {
            CanonicalToken::Unknown
        } else {
            CanonicalToken::Known(s)
        }
    }
}

impl From<CanonicalToken> for String {
    fn from(t: CanonicalToken) -> String {
        t.as_str().to_string()
    }
}

impl fmt::Display for CanonicalToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All observations for one equivalence class, before canonical forms are
/// assigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergedEntry {
    pub key: EquivalenceKey,
    /// Exact FSW variant text to number of occurrences.
    pub variants: BTreeMap<String, u64>,
    /// Normalized description to number of occurrences.
    pub descriptions: BTreeMap<String, u64>,
    /// Pre-assigned canonical form votes, normalized.
    pub canonical_votes: BTreeMap<String, u64>,
    /// First record id that contributed to the class.
    pub first_source: String,
}

/// A finished vocabulary entry.
#[derive(Clone, Debug, PartialEq)]
pub struct VocabEntry {
    pub key: EquivalenceKey,
    /// Most frequent exact FSW variant (ties broken toward the
    /// lexicographically smaller text).
    pub representative: Sign,
    pub representative_fsw: String,
    /// Total number of raw records merged into the class.
    pub frequency: u64,
    pub descriptions: BTreeMap<String, u64>,
    /// Unique canonical form of the class.
    pub canonical: String,
}

/// Groups raw records by sign equivalence, normalizing descriptions
/// (lowercased, whitespace collapsed, empties dropped) and pre-assigned
/// canonical forms. Entries come out sorted by equivalence key, so the
/// result does not depend on input order beyond the counts themselves.
pub fn merge_equivalent(records: &[RawSignRecord]) -> Result<Vec<MergedEntry>, LexiconError> {
    let mut classes: BTreeMap<EquivalenceKey, MergedEntry> = BTreeMap::new();
    for record in records {
        let fsw = record.fsw.trim();
        if fsw.split_whitespace().nth(1).is_some() {
            return Err(LexiconError::InvalidRecord {
                source_id: record.source_id.clone(),
                reason: "expected exactly one sign per record".to_string(),
            });
        }
        let sign = parse_sign(fsw).map_err(|source| LexiconError::InvalidFsw {
            source_id: record.source_id.clone(),
            source,
        })?;
        let key = sign.equivalence_key();
        let entry = classes.entry(key.clone()).or_insert_with(|| MergedEntry {
            key,
            variants: BTreeMap::new(),
            descriptions: BTreeMap::new(),
            canonical_votes: BTreeMap::new(),
            first_source: record.source_id.clone(),
        });
        *entry.variants.entry(fsw.to_string()).or_insert(0) += 1;
        for d in &record.descriptions {
            let d = normalize_text(d);
            if !d.is_empty() {
                *entry.descriptions.entry(d).or_insert(0) += 1;
            }
        }
        if let Some(c) = &record.canonical {
            let c = normalize_text(c);
            if !c.is_empty() {
                *entry.canonical_votes.entry(c).or_insert(0) += 1;
            }
        }
    }
    Ok(classes.into_values().collect())
}

/// Orders the texts of a count map by descending count, ties broken by
/// ascending text.
fn rank_by_count(counts: &BTreeMap<String, u64>) -> Vec<&str> {
    let mut ranked: Vec<(&str, u64)> = counts.iter().map(|(t, c)| (t.as_str(), *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().map(|(t, _)| t).collect()
}

#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: Vec<VocabEntry>,
    by_key: HashMap<EquivalenceKey, usize>,
    by_canonical: HashMap<String, usize>,
}

impl Lexicon {
    /// Builds the vocabulary from raw records: merge into equivalence
    /// classes, pick representatives, assign unique canonical forms.
    pub fn build(records: &[RawSignRecord], top_n: usize) -> Result<Lexicon, LexiconError> {
        Lexicon::from_merged(merge_equivalent(records)?, top_n)
    }

    /// Assigns canonical forms to merged classes, processed in equivalence
    /// key order.
    ///
    /// Default form: the `top_n` most frequent descriptions joined with
    /// `"; "`. On a clash with an already assigned form the join is extended
    /// with further descriptions one at a time; if the class runs out of
    /// descriptions a ` #k` suffix (k = 2, 3, ...) disambiguates. Classes
    /// carrying pre-assigned forms use their most frequent vote instead of
    /// descriptions and fall back to the suffix rule directly. The unknown
    /// marker is reserved and never assigned.
    pub fn from_merged(merged: Vec<MergedEntry>, top_n: usize) -> Result<Lexicon, LexiconError> {
        let mut sorted = merged;
        sorted.sort_by(|a, b| a.key.cmp(&b.key));

        let mut assigned: BTreeSet<String> = BTreeSet::new();
        assigned.insert(UNKNOWN_TOKEN.to_string());

        let mut entries = Vec::with_capacity(sorted.len());
        for class in sorted {
            let ranked: Vec<&str> = match rank_by_count(&class.canonical_votes).first() {
                Some(vote) => vec![*vote],
                None => rank_by_count(&class.descriptions),
            };
            if ranked.is_empty() {
                return Err(LexiconError::EmptyDescriptions {
                    key: class.key.to_string(),
                    source_id: class.first_source.clone(),
                });
            }
            let mut take = top_n.clamp(1, ranked.len());
            let mut canonical = ranked[..take].join("; ");
            while assigned.contains(&canonical) && take < ranked.len() {
                take += 1;
                canonical = ranked[..take].join("; ");
            }
            if assigned.contains(&canonical) {
                let base = canonical.clone();
                let mut k = 2u64;
                loop {
                    let candidate = format!("{base} #{k}");
                    if !assigned.contains(&candidate) {
                        canonical = candidate;
                        break;
                    }
                    k += 1;
                }
            }
            assigned.insert(canonical.clone());

            let representative_fsw = rank_by_count(&class.variants)
                .first()
                .expect("a merged class always has at least one variant")
                .to_string();
            let representative =
                parse_sign(&representative_fsw).expect("variants were parsed during merge");
            let frequency = class.variants.values().sum();
            debug_assert_eq!(normalize_text(&canonical), canonical);
            entries.push(VocabEntry {
                key: class.key,
                representative,
                representative_fsw,
                frequency,
                descriptions: class.descriptions,
                canonical,
            });
        }
        Ok(Lexicon::from_entries(entries))
    }

    fn from_entries(entries: Vec<VocabEntry>) -> Lexicon {
        let mut by_key = HashMap::with_capacity(entries.len());
        let mut by_canonical = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            by_key.insert(e.key.clone(), i);
            by_canonical.insert(e.canonical.clone(), i);
        }
        Lexicon {
            entries,
            by_key,
            by_canonical,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in equivalence key order.
    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    /// Canonical forms in entry order. This is the text list candidate
    /// indexes are built over, so positions are comparable.
    pub fn canonical_texts(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.canonical.as_str()).collect()
    }

    pub fn lookup_by_sign(&self, sign: &Sign) -> Option<&VocabEntry> {
        self.by_key
            .get(&sign.equivalence_key())
            .map(|&i| &self.entries[i])
    }

    /// Looks up an entry by canonical form, insensitive to casing and
    /// whitespace runs.
    pub fn lookup_by_canonical(&self, text: &str) -> Result<&VocabEntry, LexiconError> {
        let normalized = normalize_text(text);
        self.by_canonical
            .get(&normalized)
            .map(|&i| &self.entries[i])
            .ok_or(LexiconError::NotFound { text: normalized })
    }

    /// The pseudo-language token for a sign: its class canonical form when
    /// the sign is in the vocabulary, the unknown marker otherwise.
    pub fn token_for_sign(&self, sign: &Sign) -> CanonicalToken {
        match self.lookup_by_sign(sign) {
            Some(e) => CanonicalToken::Known(e.canonical.clone()),
            None => CanonicalToken::Unknown,
        }
    }

    /// Writes the vocabulary as JSONL, one entry per line in equivalence key
    /// order. Output is byte-identical for equal vocabularies.
    pub fn save(&self, path: &Path) -> Result<(), LexiconError> {
        let mut w = BufWriter::new(File::create(path)?);
        for e in &self.entries {
            let row = VocabRow {
                key: e.key.key_texts(),
                fsw: e.representative_fsw.clone(),
                frequency: e.frequency,
                canonical: e.canonical.clone(),
                descriptions: e.descriptions.clone(),
            };
            serde_json::to_writer(&mut w, &row).map_err(io_error)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a vocabulary written by [`Lexicon::save`], re-checking the
    /// structural invariants: parseable representatives whose equivalence
    /// key matches the stored one, and unique canonical forms.
    pub fn load(path: &Path) -> Result<Lexicon, LexiconError> {
        let corrupt = |line: usize, reason: String| LexiconError::Corrupt {
            path: path.display().to_string(),
            line,
            reason,
        };
        let reader = BufReader::new(File::open(path)?);
        let mut entries = Vec::new();
        let mut seen_canonical = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: VocabRow =
                serde_json::from_str(&line).map_err(|e| corrupt(i + 1, e.to_string()))?;
            let representative = parse_sign(&row.fsw).map_err(|e| corrupt(i + 1, e.to_string()))?;
            let key = EquivalenceKey::from_key_texts(&row.key)
                .map_err(|e| corrupt(i + 1, e.to_string()))?;
            if representative.equivalence_key() != key {
                return Err(corrupt(
                    i + 1,
                    "stored key does not match the representative sign".to_string(),
                ));
            }
            if row.canonical == UNKNOWN_TOKEN || !seen_canonical.insert(row.canonical.clone()) {
                return Err(corrupt(
                    i + 1,
                    format!("canonical form {:?} is reserved or repeated", row.canonical),
                ));
            }
            entries.push(VocabEntry {
                key,
                representative,
                representative_fsw: row.fsw,
                frequency: row.frequency,
                descriptions: row.descriptions,
                canonical: row.canonical,
            });
        }
        Ok(Lexicon::from_entries(entries))
    }
}

#[derive(Serialize, Deserialize)]
struct VocabRow {
    key: Vec<String>,
    fsw: String,
    frequency: u64,
    canonical: String,
    descriptions: BTreeMap<String, u64>,
}

fn io_error(e: serde_json::Error) -> LexiconError {
    LexiconError::Io(std::io::Error::other(e))
}

/// Reads raw sign records from JSONL (`fsw`, `descriptions`, `source_id`,
/// optional `canonical`) or, when the path ends in `.tsv`, from tab-separated
/// columns `fsw`, `descriptions` (`||`-separated), `source_id`, `canonical`.
/// Records missing a `source_id` get `"<path>:<line>"`.
pub fn read_raw_records(path: &Path) -> Result<Vec<RawSignRecord>, LexiconError> {
    let reader = BufReader::new(File::open(path)?);
    let is_tsv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record = if is_tsv {
            let mut cols = line.split('\t');
            let fsw = cols.next().unwrap_or_default().trim().to_string();
            let descriptions = cols
                .next()
                .map(|c| {
                    c.split("||")
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            let source_id = cols.next().map(str::trim).unwrap_or_default().to_string();
            let canonical = cols
                .next()
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string);
            RawSignRecord {
                fsw,
                descriptions,
                source_id,
                canonical,
            }
        } else {
            serde_json::from_str(&line).map_err(|e| LexiconError::Corrupt {
                path: path.display().to_string(),
                line: i + 1,
                reason: e.to_string(),
            })?
        };
        if record.source_id.is_empty() {
            record.source_id = format!("{}:{}", path.display(), i + 1);
        }
        records.push(record);
    }
    Ok(records)
}
