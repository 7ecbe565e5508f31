//! Corpus-level 4-gram BLEU with brevity penalty and exponential smoothing,
//! matching the standard scorer's behavior for whitespace-tokenized input:
//! smoothing halves the precision contribution at each zero-match order
//! (mteval-v13a style), and a corpus with no matching n-grams at any order
//! scores exactly 0 before smoothing can apply.

use std::collections::HashMap;

use super::MetricsError;

const MAX_ORDER: usize = 4;

/// Stand-in for ln(0) used by the reference scorer; drives the geometric
/// mean to zero without raising an error.
const LOG_ZERO: f64 = -9_999_999_999.0;

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU in [0, 100]; one reference per hypothesis, aligned by
/// position. Tokenization is plain whitespace splitting.
pub fn corpus_bleu(references: &[String], hypotheses: &[String]) -> Result<f64, MetricsError> {
    if references.len() != hypotheses.len() {
        return Err(MetricsError::LengthMismatch {
            refs: references.len(),
            hyps: hypotheses.len(),
        });
    }
    if references.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }

    let mut correct = [0u64; MAX_ORDER];
    let mut total = [0u64; MAX_ORDER];
    let mut sys_len = 0u64;
    let mut ref_len = 0u64;

    for (reference, hypothesis) in references.iter().zip(hypotheses) {
        let ref_tokens: Vec<&str> = reference.split_whitespace().collect();
        let hyp_tokens: Vec<&str> = hypothesis.split_whitespace().collect();
        sys_len += hyp_tokens.len() as u64;
        ref_len += ref_tokens.len() as u64;
        for n in 1..=MAX_ORDER {
            let ref_grams = ngram_counts(&ref_tokens, n);
            for (gram, count) in ngram_counts(&hyp_tokens, n) {
                total[n - 1] += count;
                correct[n - 1] += count.min(ref_grams.get(gram).copied().unwrap_or(0));
            }
        }
    }

    let bp = if sys_len < ref_len {
        if sys_len == 0 {
            0.0
        } else {
            (1.0 - ref_len as f64 / sys_len as f64).exp()
        }
    } else {
        1.0
    };

    if correct.iter().all(|&c| c == 0) {
        return Ok(0.0);
    }

    let mut precisions = [0.0f64; MAX_ORDER];
    let mut smooth = 1.0f64;
    for n in 1..=MAX_ORDER {
        if total[n - 1] == 0 {
            break;
        }
        if correct[n - 1] == 0 {
            smooth *= 2.0;
            precisions[n - 1] = 100.0 / (smooth * total[n - 1] as f64);
        } else {
            precisions[n - 1] = 100.0 * correct[n - 1] as f64 / total[n - 1] as f64;
        }
    }

    let log_sum: f64 = precisions
        .iter()
        .map(|&p| if p == 0.0 { LOG_ZERO } else { p.ln() })
        .sum();
    Ok(bp * (log_sum / MAX_ORDER as f64).exp())
}
