use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentimentCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

impl SentimentCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.neutral
    }

    pub fn get(&self, s: Sentiment) -> usize {
        match s {
            Sentiment::Positive => self.positive,
            Sentiment::Negative => self.negative,
            Sentiment::Neutral => self.neutral,
        }
    }

    fn bump(&mut self, s: Sentiment) {
        match s {
            Sentiment::Positive => self.positive += 1,
            Sentiment::Negative => self.negative += 1,
            Sentiment::Neutral => self.neutral += 1,
        }
    }
}

/// Annotation counts per sentiment and their percentages (0 for an empty corpus).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentHistogram {
    pub counts: SentimentCounts,
    pub positive_pct: f64,
    pub negative_pct: f64,
    pub neutral_pct: f64,
}

pub fn sentiment_distribution(corpus: &Corpus) -> SentimentHistogram {
    let mut counts = SentimentCounts::default();
    for a in corpus.annotations() {
        counts.bump(a.sentiment());
    }
    let total = counts.total();
    let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
    SentimentHistogram {
        counts,
        positive_pct: pct(counts.positive),
        negative_pct: pct(counts.negative),
        neutral_pct: pct(counts.neutral),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Annotation, EmotionLabel};

    #[test]
    fn fifty_twenty_five_twenty_five() {
        let mut c = Corpus::new("t");
        for e in [EmotionLabel::Awe, EmotionLabel::Excitement, EmotionLabel::Fear, EmotionLabel::SomethingElse] {
            c.push_annotation("", "", Annotation::original("p", e, "x"));
        }
        let h = sentiment_distribution(&c);
        assert_eq!((h.positive_pct, h.negative_pct, h.neutral_pct), (50.0, 25.0, 25.0));
        assert_eq!(h.counts.total(), 4);
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let h = sentiment_distribution(&Corpus::new("e"));
        assert_eq!(h.counts, SentimentCounts::default());
        assert_eq!((h.positive_pct, h.negative_pct, h.neutral_pct), (0.0, 0.0, 0.0));
    }
}
