use std::collections::HashMap;

use crate::{Error, Result};

pub(crate) fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU-n with uniform weights.
///
/// Unigram precision is unsmoothed; precisions of order 2 and above use add-one smoothing
/// `(matches + 1) / (total + 1)`. The brevity penalty uses the reference length closest to
/// the candidate length, preferring the shorter one on ties.
pub fn bleu<S: AsRef<str>, R: AsRef<[S]>>(generated: &[S], references: &[R], n: usize) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidParameter(format!("BLEU order {n} outside 1..=4")));
    }
    if references.is_empty() {
        return Err(Error::Empty("reference list"));
    }
    if generated.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for order in 1..=n {
        let candidate = ngram_counts(generated, order);
        let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
        for r in references {
            for (gram, c) in ngram_counts(r.as_ref(), order) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        let total: usize = candidate.values().sum();
        let clipped: usize = candidate.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
        let precision =
            if order == 1 { clipped as f64 / total as f64 } else { (clipped as f64 + 1.0) / (total as f64 + 1.0) };
        if precision == 0.0 {
            return Ok(0.0);
        }
        log_sum += precision.ln();
    }
    let c = generated.len();
    let r = references
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("non-empty references");
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * (log_sum / n as f64).exp())
}
