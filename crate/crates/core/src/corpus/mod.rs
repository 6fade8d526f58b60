//! Paintings, emotion-labelled annotations and image feature vectors.

mod emotion;
pub(crate) mod features;
mod ingest;
mod jsonl;
mod ops;

pub use emotion::{EmotionLabel, Sentiment};
pub use features::{decode_features, encode_features, read_features, write_features, FeatureSet, FeatureVector};
pub use ingest::{ingest_annotations, write_annotations_csv, ColumnMapping, IngestOutcome, SkippedRow};
pub use jsonl::{read_corpus_jsonl, write_corpus_jsonl, AnnotationRecord};
pub use ops::{build_combined, merge, subsample, MergeOutcome};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Where an annotation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Original,
    Contrastive,
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(Source::Original),
            "contrastive" => Ok(Source::Contrastive),
            other => Err(Error::InvalidParameter(format!("unknown source tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub painting_id: String,
    pub emotion: EmotionLabel,
    pub utterance: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_id: Option<String>,
    /// Set only for contrastive records: the biased painting whose task produced this one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_painting_id: Option<String>,
}

impl Annotation {
    pub fn original(painting_id: impl Into<String>, emotion: EmotionLabel, utterance: impl Into<String>) -> Self {
        Annotation {
            painting_id: painting_id.into(),
            emotion,
            utterance: utterance.into(),
            source: Source::Original,
            worker_id: None,
            query_painting_id: None,
        }
    }

    pub fn sentiment(&self) -> Sentiment {
        self.emotion.sentiment()
    }

    pub fn validate(&self) -> Result<()> {
        if self.painting_id.trim().is_empty() {
            return Err(Error::InvalidRecord("empty painting id".into()));
        }
        if self.utterance.trim().is_empty() {
            return Err(Error::InvalidRecord(format!("empty utterance for `{}`", self.painting_id)));
        }
        if self.source == Source::Contrastive && self.query_painting_id.is_none() {
            return Err(Error::InvalidRecord(format!(
                "contrastive annotation for `{}` lacks a query painting id",
                self.painting_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Painting {
    pub id: String,
    pub art_style: String,
    pub image_ref: String,
    pub annotations: Vec<Annotation>,
}

impl Painting {
    pub fn new(id: impl Into<String>, art_style: impl Into<String>) -> Self {
        Painting { id: id.into(), art_style: art_style.into(), image_ref: String::new(), annotations: Vec::new() }
    }
}

/// A named collection of paintings keyed by id, with optional feature vectors.
///
/// Insertion order of paintings and of annotations within a painting is preserved;
/// every downstream operation that needs randomness takes an explicit seed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub name: String,
    paintings: IndexMap<String, Painting>,
    features: Option<FeatureSet>,
}

impl Corpus {
    pub fn new(name: impl Into<String>) -> Self {
        Corpus { name: name.into(), paintings: IndexMap::new(), features: None }
    }

    pub fn from_paintings(name: impl Into<String>, paintings: impl IntoIterator<Item = Painting>) -> Result<Self> {
        let mut corpus = Corpus::new(name);
        for p in paintings {
            if corpus.paintings.contains_key(&p.id) {
                return Err(Error::InvalidRecord(format!("duplicate painting id `{}`", p.id)));
            }
            corpus.paintings.insert(p.id.clone(), p);
        }
        Ok(corpus)
    }

    /// Appends an annotation, creating its painting on first sight.
    pub fn push_annotation(&mut self, art_style: &str, image_ref: &str, annotation: Annotation) {
        let painting = self.paintings.entry(annotation.painting_id.clone()).or_insert_with(|| Painting {
            id: annotation.painting_id.clone(),
            art_style: art_style.to_string(),
            image_ref: image_ref.to_string(),
            annotations: Vec::new(),
        });
        if painting.art_style.is_empty() && !art_style.is_empty() {
            painting.art_style = art_style.to_string();
        }
        if painting.image_ref.is_empty() && !image_ref.is_empty() {
            painting.image_ref = image_ref.to_string();
        }
        painting.annotations.push(annotation);
    }

    pub fn insert_painting(&mut self, painting: Painting) -> Option<Painting> {
        self.paintings.insert(painting.id.clone(), painting)
    }

    pub fn painting(&self, id: &str) -> Option<&Painting> {
        self.paintings.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.paintings.contains_key(id)
    }

    pub fn paintings(&self) -> impl ExactSizeIterator<Item = &Painting> {
        self.paintings.values()
    }

    pub fn painting_ids(&self) -> impl ExactSizeIterator<Item = &str> {
        self.paintings.keys().map(String::as_str)
    }

    pub fn painting_count(&self) -> usize {
        self.paintings.len()
    }

    pub fn annotation_count(&self) -> usize {
        self.paintings.values().map(|p| p.annotations.len()).sum()
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.paintings.values().flat_map(|p| p.annotations.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.paintings.is_empty()
    }

    pub fn features(&self) -> Option<&FeatureSet> {
        self.features.as_ref()
    }

    /// Attaches feature vectors. Vectors whose painting is not in the corpus are left
    /// out of the corpus and returned so the caller can flag them.
    pub fn attach_features(&mut self, features: FeatureSet) -> Vec<String> {
        let mut unknown = Vec::new();
        let mut kept = FeatureSet::with_dim(features.dim());
        for v in features.into_vectors() {
            if self.paintings.contains_key(&v.painting_id) {
                kept.insert(v).expect("dimension already validated");
            } else {
                unknown.push(v.painting_id);
            }
        }
        self.features = Some(kept);
        unknown
    }

    pub fn set_features(&mut self, features: Option<FeatureSet>) {
        self.features = features;
    }

    pub fn retain_paintings(&mut self, mut keep: impl FnMut(&Painting) -> bool) {
        self.paintings.retain(|_, p| keep(p));
        if let Some(features) = self.features.as_mut() {
            let paintings = &self.paintings;
            features.retain(|id| paintings.contains_key(id));
        }
    }

    pub(crate) fn paintings_mut(&mut self) -> &mut IndexMap<String, Painting> {
        &mut self.paintings
    }
}
