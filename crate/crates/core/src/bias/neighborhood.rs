use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::corpus::{Corpus, EmotionLabel, Painting};
use crate::index::SimilarityIndex;
use crate::{Error, Result};

/// Share of same-sentiment paintings among the K visual neighbours of single-sentiment paintings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodRatio {
    /// Mean over query paintings of the same-sentiment fraction, for each K.
    pub per_k: BTreeMap<usize, f64>,
    /// Unweighted mean of `per_k` over the K values.
    pub per_k_mean: f64,
    /// Same-sentiment neighbours over all neighbours inspected, pooling every (painting, K) pair.
    pub pooled: f64,
    pub evaluated: usize,
    /// Single-sentiment paintings without a feature vector in the index.
    pub missing: Vec<String>,
}

pub fn neighborhood_sentiment_ratio(
    corpus: &Corpus,
    index: &SimilarityIndex,
    k_range: RangeInclusive<usize>,
) -> Result<NeighborhoodRatio> {
    let (k_min, k_max) = (*k_range.start(), *k_range.end());
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidParameter(format!("invalid K range {k_min}..={k_max}")));
    }
    if k_max >= index.len() {
        return Err(Error::InvalidParameter(format!("K={k_max} needs more than {} indexed paintings", index.len())));
    }
    let mut queries = Vec::new();
    let mut missing = Vec::new();
    for p in corpus.paintings() {
        if let Some(s) = p.single_sentiment() {
            if index.contains(&p.id) {
                queries.push((p.id.as_str(), s));
            } else {
                missing.push(p.id.clone());
            }
        }
    }
    if !missing.is_empty() {
        warn!(count = missing.len(), "single-sentiment paintings missing from the index were excluded");
    }

    // For each query, a prefix-count of same-sentiment neighbours up to k_max.
    let prefix: Vec<Vec<usize>> = queries
        .par_iter()
        .map(|(id, sentiment)| {
            let neighbors = index.query(id, k_max).expect("query id is indexed").neighbors;
            let mut acc = 0;
            let mut out = Vec::with_capacity(k_max);
            for n in neighbors {
                if corpus.painting(&n.painting_id).and_then(Painting::dominant_sentiment) == Some(*sentiment) {
                    acc += 1;
                }
                out.push(acc);
            }
            out
        })
        .collect();

    let mut per_k = BTreeMap::new();
    let mut similar_total = 0usize;
    let mut inspected_total = 0usize;
    for k in k_range {
        let mut sum = 0.0;
        for counts in &prefix {
            let similar = counts[k - 1];
            sum += similar as f64 / k as f64;
            similar_total += similar;
            inspected_total += k;
        }
        per_k.insert(k, if prefix.is_empty() { 0.0 } else { sum / prefix.len() as f64 });
    }
    let per_k_mean = per_k.values().sum::<f64>() / per_k.len() as f64;
    let pooled = if inspected_total == 0 { 0.0 } else { similar_total as f64 / inspected_total as f64 };
    Ok(NeighborhoodRatio { per_k, per_k_mean, pooled, evaluated: prefix.len(), missing })
}

/// Shannon entropy of a 9-way emotion histogram divided by `ln 9`, so it lies in `[0, 1]`.
/// An empty histogram has entropy 0.
pub fn normalized_emotion_entropy(counts: &[usize; 9]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    (h / (EmotionLabel::ALL.len() as f64).ln()).max(0.0)
}

/// Mean, over indexed corpus paintings, of the normalised entropy of the emotions pooled
/// from their `k` nearest neighbours. The query's own annotations are not in its pool;
/// paintings whose pool is empty are skipped.
pub fn neighborhood_emotion_entropy(corpus: &Corpus, index: &SimilarityIndex, k: usize) -> Result<f64> {
    if k == 0 || k >= index.len() {
        return Err(Error::InvalidParameter(format!("k={k} outside 1..{}", index.len())));
    }
    let queries: Vec<&str> = corpus.painting_ids().filter(|id| index.contains(id)).collect();
    let entropies: Vec<f64> = queries
        .par_iter()
        .filter_map(|id| {
            let neighbors = index.query(id, k).expect("query id is indexed").neighbors;
            let mut counts = [0usize; 9];
            for n in &neighbors {
                if let Some(p) = corpus.painting(&n.painting_id) {
                    for a in &p.annotations {
                        counts[a.emotion.index()] += 1;
                    }
                }
            }
            (counts.iter().sum::<usize>() > 0).then(|| normalized_emotion_entropy(&counts))
        })
        .collect();
    if entropies.is_empty() {
        return Ok(0.0);
    }
    Ok(entropies.iter().sum::<f64>() / entropies.len() as f64)
}
