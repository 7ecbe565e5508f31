//! Evaluation of translation runs: sentence-level symbol F1, corpus BLEU
//! and chrF2, and mean absolute error of symbol positions.
//!
//! Sign output is normalized (symbols sorted within each sign) before any
//! comparison, so within-sign symbol order never affects a score. F1 and
//! MAE only apply to sign output; spoken output is scored with BLEU and
//! chrF2 over lowercased text.

mod bleu;
mod chrf;

pub use bleu::corpus_bleu;
pub use chrf::corpus_chrf2;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusItem;
use crate::fsw::{parse_sequence, FswError, SignSequence};
use crate::Direction;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("corpus sizes differ: {refs} references vs {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("gold/prediction id mismatch: {detail}")]
    IdMismatch { detail: String },
    #[error("prediction {id} is not a valid sign sequence: {source}")]
    InvalidFsw { id: String, source: FswError },
}

/// Symbol-level precision/recall/F1 for one sentence pair, computed over
/// the multisets of symbol keys (base, fill, rotation) of all signs,
/// ignoring coordinates and ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub matched_symbols: u64,
    pub gold_symbols: u64,
    pub pred_symbols: u64,
}

fn key_multiset(seq: &SignSequence) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for key in seq.all_key_texts() {
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// Harmonic mean of symbol precision and recall for one sentence.
/// Both sequences empty counts as a perfect match; exactly one empty as a
/// total miss.
pub fn symbol_f1(gold: &SignSequence, pred: &SignSequence) -> SentenceScore {
    let gold_counts = key_multiset(gold);
    let pred_counts = key_multiset(pred);
    let gold_total: u64 = gold_counts.values().sum();
    let pred_total: u64 = pred_counts.values().sum();
    let matched: u64 = pred_counts
        .iter()
        .map(|(key, count)| (*count).min(gold_counts.get(key).copied().unwrap_or(0)))
        .sum();

    let (precision, recall, f1) = if gold_total == 0 && pred_total == 0 {
        (1.0, 1.0, 1.0)
    } else if gold_total == 0 || pred_total == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let p = matched as f64 / pred_total as f64;
        let r = matched as f64 / gold_total as f64;
        let f1 = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        (p, r, f1)
    };
    SentenceScore {
        f1,
        precision,
        recall,
        matched_symbols: matched,
        gold_symbols: gold_total,
        pred_symbols: pred_total,
    }
}

/// Accumulated absolute coordinate differences; corpus MAE is the mean
/// over every aligned symbol pair, not a mean of per-sentence means.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaeStats {
    pub sum_dx: u64,
    pub sum_dy: u64,
    pub pairs: u64,
}

impl MaeStats {
    pub fn absorb(&mut self, other: MaeStats) {
        self.sum_dx += other.sum_dx;
        self.sum_dy += other.sum_dy;
        self.pairs += other.pairs;
    }

    pub fn mae_x(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.sum_dx as f64 / self.pairs as f64)
    }

    pub fn mae_y(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.sum_dy as f64 / self.pairs as f64)
    }
}

/// Positional error for one sentence pair. Signs are aligned by sequence
/// index and, within each aligned sign, symbols by index after the
/// normalization sort; unmatched tails on either side contribute nothing.
pub fn mae_xy(gold: &SignSequence, pred: &SignSequence) -> MaeStats {
    let gold = gold.normalized();
    let pred = pred.normalized();
    let mut stats = MaeStats::default();
    for (g, p) in gold.0.iter().zip(&pred.0) {
        for (gs, ps) in g.positioned_symbols().iter().zip(p.positioned_symbols()) {
            stats.sum_dx += gs.coord.x.abs_diff(ps.coord.x) as u64;
            stats.sum_dy += gs.coord.y.abs_diff(ps.coord.y) as u64;
            stats.pairs += 1;
        }
    }
    stats
}

/// Token granularity for BLEU/chrF2 over sign output: one token per sign
/// (the default), or one per positioned symbol with box markers dropped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FswTokenMode {
    #[default]
    Signs,
    Symbols,
}

impl FswTokenMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FswTokenMode::Signs => "signs",
            FswTokenMode::Symbols => "symbols",
        }
    }
}

impl std::fmt::Display for FswTokenMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FswTokenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "signs" => Ok(FswTokenMode::Signs),
            "symbols" => Ok(FswTokenMode::Symbols),
            other => Err(format!("unknown token mode {other:?} (signs|symbols)")),
        }
    }
}

fn render_for_tokens(seq: &SignSequence, mode: FswTokenMode) -> String {
    match mode {
        FswTokenMode::Signs => seq.to_string(),
        FswTokenMode::Symbols => {
            let tokens: Vec<String> = seq
                .0
                .iter()
                .flat_map(|s| s.positioned_symbols().iter().map(|p| p.to_string()))
                .collect();
            tokens.join(" ")
        }
    }
}

/// One model output, keyed by corpus item id.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub output: String,
}

/// A sentence score together with the item it belongs to.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerSentence {
    pub id: String,
    #[serde(flatten)]
    pub score: SentenceScore,
}

/// Corpus-level evaluation of one run. Sign output carries all five
/// metrics; spoken output only BLEU and chrF2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub direction: Direction,
    pub n_sentences: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_f1: Option<f64>,
    pub bleu: f64,
    pub chrf2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_pairs: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_sentence: Vec<PerSentence>,
}

impl EvalReport {
    /// Plain-text two-column summary, metrics that do not apply omitted.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let mut row = |label: &str, value: String| {
            let _ = writeln!(out, "{label:<10}{value}");
        };
        row("direction", self.direction.to_string());
        row("sentences", self.n_sentences.to_string());
        if let Some(f1) = self.mean_f1 {
            row("F1", format!("{f1:.4}"));
        }
        row("BLEU", format!("{:.4}", self.bleu));
        row("ChrF2", format!("{:.4}", self.chrf2));
        if let Some(x) = self.mae_x {
            row("MAE X", format!("{x:.4}"));
        }
        if let Some(y) = self.mae_y {
            row("MAE Y", format!("{y:.4}"));
        }
        out
    }
}

fn align<'a>(
    gold: &'a [CorpusItem],
    predictions: &'a [Prediction],
) -> Result<Vec<(&'a CorpusItem, &'a str)>, MetricsError> {
    if gold.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.id.as_str(), p.output.as_str()).is_some() {
            return Err(MetricsError::IdMismatch {
                detail: format!("duplicate prediction for id {:?}", p.id),
            });
        }
    }
    if predictions.len() != gold.len() {
        return Err(MetricsError::IdMismatch {
            detail: format!(
                "{} gold items vs {} predictions",
                gold.len(),
                predictions.len()
            ),
        });
    }
    gold.iter()
        .map(|item| {
            by_id
                .get(item.id.as_str())
                .map(|output| (item, *output))
                .ok_or_else(|| MetricsError::IdMismatch {
                    detail: format!("no prediction for id {:?}", item.id),
                })
        })
        .collect()
}

/// Scores a run against gold items, pairing by item id. Sign-direction
/// predictions must parse as sign sequences; they are normalized before
/// scoring. Spoken-direction scoring lowercases both sides and keeps
/// punctuation.
pub fn evaluate_run(
    gold: &[CorpusItem],
    predictions: &[Prediction],
    direction: Direction,
    token_mode: FswTokenMode,
) -> Result<EvalReport, MetricsError> {
    let aligned = align(gold, predictions)?;

    match direction {
        Direction::Text2Sign => {
            let mut refs = Vec::with_capacity(aligned.len());
            let mut hyps = Vec::with_capacity(aligned.len());
            let mut per_sentence = Vec::with_capacity(aligned.len());
            let mut mae = MaeStats::default();
            let mut f1_sum = 0.0;
            for (item, output) in &aligned {
                let pred = parse_sequence(output)
                    .map_err(|source| MetricsError::InvalidFsw {
                        id: item.id.clone(),
                        source,
                    })?
                    .normalized();
                let gold_seq = item.signs.normalized();
                let score = symbol_f1(&gold_seq, &pred);
                f1_sum += score.f1;
                mae.absorb(mae_xy(&gold_seq, &pred));
                refs.push(render_for_tokens(&gold_seq, token_mode));
                hyps.push(render_for_tokens(&pred, token_mode));
                per_sentence.push(PerSentence {
                    id: item.id.clone(),
                    score,
                });
            }
            Ok(EvalReport {
                direction,
                n_sentences: aligned.len(),
                mean_f1: Some(f1_sum / aligned.len() as f64),
                bleu: corpus_bleu(&refs, &hyps)?,
                chrf2: corpus_chrf2(&refs, &hyps)?,
                mae_x: mae.mae_x(),
                mae_y: mae.mae_y(),
                mae_pairs: Some(mae.pairs),
                per_sentence,
            })
        }
        Direction::Sign2Text => {
            let refs: Vec<String> = aligned
                .iter()
                .map(|(item, _)| item.spoken.to_lowercase())
                .collect();
            let hyps: Vec<String> = aligned
                .iter()
                .map(|(_, output)| output.to_lowercase())
                .collect();
            Ok(EvalReport {
                direction,
                n_sentences: aligned.len(),
                mean_f1: None,
                bleu: corpus_bleu(&refs, &hyps)?,
                chrf2: corpus_chrf2(&refs, &hyps)?,
                mae_x: None,
                mae_y: None,
                mae_pairs: None,
                per_sentence: Vec::new(),
            })
        }
    }
}
