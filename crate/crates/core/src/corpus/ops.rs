use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tracing::warn;

use super::{Corpus, FeatureSet, Painting};
use crate::{Error, Result};

/// Keeps a uniformly random subset of exactly `target` annotations.
///
/// Sampling is uniform over annotations (not stratified by painting). Surviving
/// annotations keep their input order; paintings left empty are dropped.
pub fn subsample(corpus: &Corpus, target: usize, seed: u64) -> Result<Corpus> {
    let total = corpus.annotation_count();
    if target > total {
        return Err(Error::InvalidParameter(format!("target {target} exceeds annotation count {total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; total];
    for i in rand::seq::index::sample(&mut rng, total, target) {
        keep[i] = true;
    }

    let mut out = Corpus::new(corpus.name.clone());
    let mut flat = 0usize;
    for painting in corpus.paintings() {
        let annotations: Vec<_> = painting
            .annotations
            .iter()
            .filter(|_| {
                let k = keep[flat];
                flat += 1;
                k
            })
            .cloned()
            .collect();
        if !annotations.is_empty() {
            out.insert_painting(Painting { annotations, ..painting.clone_meta() });
        }
    }
    if let Some(features) = corpus.features() {
        let mut kept = features.clone();
        kept.retain(|id| out.contains(id));
        out.set_features(Some(kept));
    }
    Ok(out)
}

impl Painting {
    fn clone_meta(&self) -> Painting {
        Painting {
            id: self.id.clone(),
            art_style: self.art_style.clone(),
            image_ref: self.image_ref.clone(),
            annotations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub corpus: Corpus,
    /// Painting ids whose art style differed between the inputs (the base value was kept).
    pub style_conflicts: Vec<String>,
}

/// Union of two corpora. Paintings are deduplicated by id, annotations appended
/// after the base's, and source tags preserved.
pub fn merge(base: &Corpus, additions: &Corpus) -> Result<MergeOutcome> {
    let features = match (base.features(), additions.features()) {
        (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() && a.dim() != b.dim() => {
            return Err(Error::DimensionMismatch { id: "<merge>".into(), expected: a.dim(), found: b.dim() });
        }
        (Some(a), Some(b)) => {
            let mut merged = if a.is_empty() { FeatureSet::with_dim(b.dim()) } else { a.clone() };
            for v in b.iter() {
                if !merged.contains(&v.painting_id) {
                    merged.insert(v.clone())?;
                }
            }
            Some(merged)
        }
        (a, b) => a.or(b).cloned(),
    };

    let mut out = base.clone();
    let mut style_conflicts = Vec::new();
    for painting in additions.paintings() {
        let entry = out.paintings_mut().entry(painting.id.clone());
        match entry {
            indexmap::map::Entry::Occupied(mut slot) => {
                let existing = slot.get_mut();
                if !painting.art_style.is_empty()
                    && !existing.art_style.is_empty()
                    && painting.art_style != existing.art_style
                {
                    warn!(painting_id = %painting.id, base = %existing.art_style, other = %painting.art_style, "conflicting art style, keeping base");
                    style_conflicts.push(painting.id.clone());
                }
                if existing.art_style.is_empty() {
                    existing.art_style = painting.art_style.clone();
                }
                if existing.image_ref.is_empty() {
                    existing.image_ref = painting.image_ref.clone();
                }
                existing.annotations.extend(painting.annotations.iter().cloned());
            }
            indexmap::map::Entry::Vacant(slot) => {
                slot.insert(painting.clone());
            }
        }
    }
    out.set_features(features);
    Ok(MergeOutcome { corpus: out, style_conflicts })
}

/// Builds a training corpus balanced between contrastive and original captions: all of
/// `contrastive` plus an equally sized random subset of `original`, then trimmed at random
/// to the size of `original` when larger.
pub fn build_combined(original: &Corpus, contrastive: &Corpus, seed: u64) -> Result<Corpus> {
    let half = contrastive.annotation_count().min(original.annotation_count());
    let sampled = subsample(original, half, seed)?;
    let mut combined = merge(&sampled, contrastive)?.corpus;
    if let Some(features) = original.features() {
        let mut all = features.clone();
        all.retain(|id| combined.contains(id));
        combined.set_features(Some(all));
    }
    let target = original.annotation_count();
    if combined.annotation_count() > target {
        combined = subsample(&combined, target, seed.wrapping_add(1))?;
    }
    combined.name = format!("{}+{}", original.name, contrastive.name);
    Ok(combined)
}
