use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

/// The nine emotion categories an annotator can pick for a painting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmotionLabel {
    Amusement,
    Awe,
    Contentment,
    Excitement,
    Anger,
    Disgust,
    Fear,
    Sadness,
    SomethingElse,
}

/// Coarse polarity of an [`EmotionLabel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 9] = [
        EmotionLabel::Amusement,
        EmotionLabel::Awe,
        EmotionLabel::Contentment,
        EmotionLabel::Excitement,
        EmotionLabel::Anger,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Sadness,
        EmotionLabel::SomethingElse,
    ];

    pub const POSITIVE: [EmotionLabel; 4] =
        [EmotionLabel::Amusement, EmotionLabel::Awe, EmotionLabel::Contentment, EmotionLabel::Excitement];

    pub const NEGATIVE: [EmotionLabel; 4] =
        [EmotionLabel::Anger, EmotionLabel::Disgust, EmotionLabel::Fear, EmotionLabel::Sadness];

    pub fn sentiment(self) -> Sentiment {
        match self {
            EmotionLabel::Amusement | EmotionLabel::Awe | EmotionLabel::Contentment | EmotionLabel::Excitement => {
                Sentiment::Positive
            }
            EmotionLabel::Anger | EmotionLabel::Disgust | EmotionLabel::Fear | EmotionLabel::Sadness => {
                Sentiment::Negative
            }
            EmotionLabel::SomethingElse => Sentiment::Neutral,
        }
    }

    /// Position in [`EmotionLabel::ALL`], handy for fixed-size histograms.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Amusement => "amusement",
            EmotionLabel::Awe => "awe",
            EmotionLabel::Contentment => "contentment",
            EmotionLabel::Excitement => "excitement",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::SomethingElse => "something-else",
        }
    }
}

impl Sentiment {
    /// The polarity an annotator must express to contrast with `self`.
    pub fn opposite(self) -> Option<Sentiment> {
        match self {
            Sentiment::Positive => Some(Sentiment::Negative),
            Sentiment::Negative => Some(Sentiment::Positive),
            Sentiment::Neutral => None,
        }
    }

    /// Emotions belonging to this sentiment.
    pub fn emotions(self) -> &'static [EmotionLabel] {
        match self {
            Sentiment::Positive => &EmotionLabel::POSITIVE,
            Sentiment::Negative => &EmotionLabel::NEGATIVE,
            Sentiment::Neutral => &[EmotionLabel::SomethingElse],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    /// Case-insensitive. The released ArtEmis CSVs spell the neutral class
    /// `something else`, so space and underscore separators are accepted too.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        let label = match norm.as_str() {
            "amusement" => EmotionLabel::Amusement,
            "awe" => EmotionLabel::Awe,
            "contentment" => EmotionLabel::Contentment,
            "excitement" => EmotionLabel::Excitement,
            "anger" => EmotionLabel::Anger,
            "disgust" => EmotionLabel::Disgust,
            "fear" => EmotionLabel::Fear,
            "sadness" => EmotionLabel::Sadness,
            "something-else" | "something else" | "something_else" => EmotionLabel::SomethingElse,
            _ => return Err(Error::UnknownEmotion(s.to_string())),
        };
        Ok(label)
    }
}

impl Serialize for EmotionLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EmotionLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
