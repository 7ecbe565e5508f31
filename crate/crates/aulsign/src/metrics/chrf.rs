//! Corpus chrF2: character n-gram F-score, orders 1 through 6, recall
//! weighted by beta = 2, matching the standard scorer's defaults.
//! Whitespace is removed before n-gram extraction; statistics are summed
//! over the corpus and the per-order F-scores averaged over the orders
//! observed in both sides.

use std::collections::HashMap;

use super::MetricsError;

const CHAR_ORDER: usize = 6;
const BETA: f64 = 2.0;
const EPS: f64 = 1e-16;

#[derive(Clone, Copy, Default)]
struct OrderStats {
    hyp: u64,
    reference: u64,
    matched: u64,
}

fn squeezed(line: &str) -> Vec<char> {
    line.split_whitespace().flat_map(str::chars).collect()
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for gram in chars.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus chrF2 in [0, 100]; one reference per hypothesis, aligned by
/// position.
pub fn corpus_chrf2(references: &[String], hypotheses: &[String]) -> Result<f64, MetricsError> {
    if references.len() != hypotheses.len() {
        return Err(MetricsError::LengthMismatch {
            refs: references.len(),
            hyps: hypotheses.len(),
        });
    }
    if references.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }

    let mut stats = [OrderStats::default(); CHAR_ORDER];
    for (reference, hypothesis) in references.iter().zip(hypotheses) {
        let ref_chars = squeezed(reference);
        let hyp_chars = squeezed(hypothesis);
        for n in 1..=CHAR_ORDER {
            let ref_grams = char_ngrams(&ref_chars, n);
            let entry = &mut stats[n - 1];
            entry.reference += ref_grams.values().sum::<u64>();
            for (gram, count) in char_ngrams(&hyp_chars, n) {
                entry.hyp += count;
                entry.matched += count.min(ref_grams.get(gram).copied().unwrap_or(0));
            }
        }
    }

    let factor = BETA * BETA;
    let mut score = 0.0;
    let mut effective_order = 0u32;
    for entry in &stats {
        let precision = if entry.hyp > 0 {
            entry.matched as f64 / entry.hyp as f64
        } else {
            EPS
        };
        let recall = if entry.reference > 0 {
            entry.matched as f64 / entry.reference as f64
        } else {
            EPS
        };
        if entry.hyp > 0 && entry.reference > 0 {
            effective_order += 1;
        }
        let denom = factor * precision + recall;
        if denom > 0.0 {
            score += (1.0 + factor) * precision * recall / denom;
        }
    }

    if effective_order == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * score / effective_order as f64)
}
