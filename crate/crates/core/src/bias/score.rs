use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Annotation, Corpus, Painting, Sentiment};
use crate::{Error, Result};

/// Polarity summary of one painting's annotations: `(pos - neg) / total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionalScore {
    pub painting_id: String,
    pub pos: usize,
    pub neg: usize,
    /// All annotations, neutral ones included.
    pub total: usize,
    pub score: f64,
}

impl EmotionalScore {
    /// Sign of the score as a sentiment; `None` when the score is zero.
    pub fn polarity(&self) -> Option<Sentiment> {
        match self.pos.cmp(&self.neg) {
            std::cmp::Ordering::Greater => Some(Sentiment::Positive),
            std::cmp::Ordering::Less => Some(Sentiment::Negative),
            std::cmp::Ordering::Equal => None,
        }
    }
}

pub fn emotional_score(annotations: &[Annotation]) -> Result<EmotionalScore> {
    let first = annotations.first().ok_or(Error::Empty("annotation list"))?;
    let mut pos = 0;
    let mut neg = 0;
    for a in annotations {
        if a.painting_id != first.painting_id {
            return Err(Error::InvalidRecord(format!(
                "annotations of `{}` and `{}` mixed in one score",
                first.painting_id, a.painting_id
            )));
        }
        match a.sentiment() {
            Sentiment::Positive => pos += 1,
            Sentiment::Negative => neg += 1,
            Sentiment::Neutral => {}
        }
    }
    let total = annotations.len();
    Ok(EmotionalScore {
        painting_id: first.painting_id.clone(),
        pos,
        neg,
        total,
        score: (pos as f64 - neg as f64) / total as f64,
    })
}

impl Painting {
    /// `None` for a painting without annotations.
    pub fn emotional_score(&self) -> Option<EmotionalScore> {
        emotional_score(&self.annotations).ok()
    }

    /// Majority sentiment between positive and negative annotations; `None` on a tie
    /// (including a neutral-only painting).
    pub fn dominant_sentiment(&self) -> Option<Sentiment> {
        self.emotional_score().and_then(|s| s.polarity())
    }

    /// `Some(sentiment)` when the annotations contain one polarity and never the other.
    pub fn single_sentiment(&self) -> Option<Sentiment> {
        let has = |s: Sentiment| self.annotations.iter().any(|a| a.sentiment() == s);
        match (has(Sentiment::Positive), has(Sentiment::Negative)) {
            (true, false) => Some(Sentiment::Positive),
            (false, true) => Some(Sentiment::Negative),
            _ => None,
        }
    }
}

/// Scores for every painting that has at least one annotation, in corpus order.
pub fn score_table(corpus: &Corpus) -> Vec<EmotionalScore> {
    corpus.paintings().filter_map(Painting::emotional_score).collect()
}

/// Paintings whose absolute emotional score is strictly greater than `threshold`.
pub fn identify_biased(corpus: &Corpus, threshold: f64) -> Result<BTreeSet<String>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} outside [0, 1]")));
    }
    Ok(corpus
        .paintings()
        .filter_map(Painting::emotional_score)
        .filter(|s| s.score.abs() > threshold)
        .map(|s| s.painting_id)
        .collect())
}

/// Paintings that evoke only positive or only negative emotions (neutral ones allowed alongside).
pub fn single_sentiment_set(corpus: &Corpus) -> BTreeSet<String> {
    corpus.paintings().filter(|p| p.single_sentiment().is_some()).map(|p| p.id.clone()).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::EmotionLabel::{self, *};

    fn anns(pid: &str, emotions: &[EmotionLabel]) -> Vec<Annotation> {
        emotions.iter().map(|&e| Annotation::original(pid, e, "x")).collect()
    }

    fn corpus(paintings: &[(&str, &[EmotionLabel])]) -> Corpus {
        let mut c = Corpus::new("t");
        for (pid, emos) in paintings {
            for a in anns(pid, emos) {
                c.push_annotation("", "", a);
            }
        }
        c
    }

    #[test]
    fn four_pos_one_neg() {
        let s = emotional_score(&anns("p", &[Awe, Awe, Contentment, Excitement, Fear])).unwrap();
        assert_eq!((s.pos, s.neg, s.total), (4, 1, 5));
        assert_eq!(s.score, 0.6);
    }

    #[test]
    fn all_positive_is_one() {
        assert_eq!(emotional_score(&anns("p", &[Awe; 5])).unwrap().score, 1.0);
    }

    #[test]
    fn neutral_counts_in_total_only() {
        let s = emotional_score(&anns("p", &[Awe, Amusement, Fear, Sadness, SomethingElse])).unwrap();
        assert_eq!(s.score, 0.0);
        assert_eq!(s.total, 5);
        assert_eq!(s.polarity(), None);
    }

    #[test]
    fn empty_and_mixed_lists_rejected() {
        assert!(emotional_score(&[]).is_err());
        let mut v = anns("a", &[Awe]);
        v.extend(anns("b", &[Awe]));
        assert!(emotional_score(&v).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        // 3 pos, 0 neg, 7 neutral -> exactly 0.3.
        let mut e = vec![Awe; 3];
        e.extend([SomethingElse; 7]);
        let c = corpus(&[("edge", &e), ("neg", &[Fear, Fear, Fear, Fear, Awe]), ("flat", &[Awe, Fear])]);
        let biased = identify_biased(&c, 0.3).unwrap();
        assert!(!biased.contains("edge"));
        assert!(biased.contains("neg"));
        assert!(!biased.contains("flat"));
    }

    #[test]
    fn threshold_extremes() {
        let c = corpus(&[("a", &[Awe]), ("b", &[Awe, Fear]), ("c", &[Fear, SomethingElse])]);
        let zero = identify_biased(&c, 0.0).unwrap();
        assert_eq!(zero.into_iter().collect::<Vec<_>>(), vec!["a", "c"]);
        assert!(identify_biased(&c, 1.0).unwrap().is_empty());
        assert!(identify_biased(&c, 1.5).is_err());
    }

    #[test]
    fn single_sentiment_membership() {
        let c = corpus(&[
            ("pos", &[Awe, Contentment]),
            ("mixed", &[Awe, Fear]),
            ("neutral", &[SomethingElse]),
            ("pos_neutral", &[Awe, SomethingElse]),
        ]);
        let s = single_sentiment_set(&c);
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec!["pos", "pos_neutral"]);
    }

    fn arb_emotions() -> impl Strategy<Value = Vec<EmotionLabel>> {
        prop::collection::vec(prop::sample::select(EmotionLabel::ALL.to_vec()), 1..30)
    }

    fn flip(e: EmotionLabel) -> EmotionLabel {
        match e.sentiment() {
            Sentiment::Positive => Fear,
            Sentiment::Negative => Awe,
            Sentiment::Neutral => e,
        }
    }

    proptest! {
        #[test]
        fn score_in_range_and_flips_sign(emos in arb_emotions()) {
            let s = emotional_score(&anns("p", &emos)).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s.score));
            prop_assert!(s.pos + s.neg <= s.total);
            let flipped: Vec<_> = emos.iter().map(|&e| flip(e)).collect();
            let f = emotional_score(&anns("p", &flipped)).unwrap();
            prop_assert_eq!(f.score, -s.score);
        }

        #[test]
        fn single_sentiment_never_mixed(paintings in prop::collection::vec(arb_emotions(), 1..10)) {
            let named: Vec<(String, Vec<EmotionLabel>)> = paintings.into_iter().enumerate().map(|(i, e)| (format!("p{i}"), e)).collect();
            let refs: Vec<(&str, &[EmotionLabel])> = named.iter().map(|(n, e)| (n.as_str(), e.as_slice())).collect();
            let c = corpus(&refs);
            for id in single_sentiment_set(&c) {
                let p = c.painting(&id).unwrap();
                let pos = p.annotations.iter().any(|a| a.sentiment() == Sentiment::Positive);
                let neg = p.annotations.iter().any(|a| a.sentiment() == Sentiment::Negative);
                prop_assert!(pos ^ neg);
            }
        }
    }
}
