//! Emotional-bias diagnostics for a corpus.

mod distribution;
mod neighborhood;
mod pos;
mod score;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::ops::RangeInclusive;

pub use distribution::{sentiment_distribution, SentimentCounts, SentimentHistogram};
pub use neighborhood::{
    neighborhood_emotion_entropy, neighborhood_sentiment_ratio, normalized_emotion_entropy, NeighborhoodRatio,
};
pub use pos::{pos_statistics, read_tagged_captions, PosStats, TaggedCaption, TaggedToken};
pub use score::{emotional_score, identify_biased, score_table, single_sentiment_set, EmotionalScore};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::index::SimilarityIndex;
use crate::{Error, Result};

pub const DEFAULT_BIAS_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasConfig {
    pub threshold: f64,
    pub ratio_k_min: usize,
    pub ratio_k_max: usize,
    pub entropy_ks: Vec<usize>,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig { threshold: DEFAULT_BIAS_THRESHOLD, ratio_k_min: 2, ratio_k_max: 10, entropy_ks: vec![20] }
    }
}

impl BiasConfig {
    pub fn ratio_range(&self) -> RangeInclusive<usize> {
        self.ratio_k_min..=self.ratio_k_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportNotes {
    /// The query painting's own annotations are never part of its neighbourhood pool.
    pub entropy_pool_excludes_query: bool,
    /// Neighbours with a tied or neutral-only annotation set count as a different sentiment.
    pub ratio_untied_neighbors_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub corpus: String,
    pub paintings: usize,
    pub annotations: usize,
    pub threshold: f64,
    pub scores: Vec<EmotionalScore>,
    pub biased_ids: BTreeSet<String>,
    pub single_sentiment_ids: BTreeSet<String>,
    pub sentiment_histogram: SentimentHistogram,
    /// Present when an index was supplied.
    pub neighborhood_ratio: Option<NeighborhoodRatio>,
    pub neighborhood_entropy: BTreeMap<usize, f64>,
    pub notes: ReportNotes,
}

/// Runs every diagnostic. Neighbourhood statistics need `index`; without it they are left empty.
pub fn analyze(corpus: &Corpus, index: Option<&SimilarityIndex>, config: &BiasConfig) -> Result<BiasReport> {
    let (neighborhood_ratio, neighborhood_entropy) = match index {
        Some(index) => {
            let ratio = neighborhood_sentiment_ratio(corpus, index, config.ratio_range())?;
            let entropy = config
                .entropy_ks
                .iter()
                .map(|&k| neighborhood_emotion_entropy(corpus, index, k).map(|h| (k, h)))
                .collect::<Result<_>>()?;
            (Some(ratio), entropy)
        }
        None => (None, BTreeMap::new()),
    };
    Ok(BiasReport {
        corpus: corpus.name.clone(),
        paintings: corpus.painting_count(),
        annotations: corpus.annotation_count(),
        threshold: config.threshold,
        scores: score_table(corpus),
        biased_ids: identify_biased(corpus, config.threshold)?,
        single_sentiment_ids: single_sentiment_set(corpus),
        sentiment_histogram: sentiment_distribution(corpus),
        neighborhood_ratio,
        neighborhood_entropy,
        notes: ReportNotes { entropy_pool_excludes_query: true, ratio_untied_neighbors_only: true },
    })
}

impl BiasReport {
    /// `painting_id,pos,neg,total,score,biased,single_sentiment`
    pub fn write_scores_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["painting_id", "pos", "neg", "total", "score", "biased", "single_sentiment"])?;
        for s in &self.scores {
            w.write_record([
                s.painting_id.as_str(),
                &s.pos.to_string(),
                &s.neg.to_string(),
                &s.total.to_string(),
                &format!("{:.6}", s.score),
                &self.biased_ids.contains(&s.painting_id).to_string(),
                &self.single_sentiment_ids.contains(&s.painting_id).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<scores csv>", e))
    }
}
