use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::corpus::Corpus;
use crate::index::SimilarityIndex;
use crate::{Error, Result};

pub const NN_SPEAKER_NEIGHBORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerOutput {
    pub painting_id: String,
    pub utterance: String,
    /// Training painting the utterance was taken from.
    pub source_painting: String,
    pub neighbors: Vec<String>,
}

/// Stable per-painting stream so outputs do not depend on the order paintings are evaluated in.
fn painting_rng(seed: u64, painting_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ crate::stable_hash(painting_id.as_bytes()))
}

/// Nearest-neighbour baseline: pool the captions of the 3 visually closest training
/// paintings and return one of them uniformly at random.
///
/// The index must cover the test painting; only neighbours that are annotated paintings
/// of `train` are considered, and the test painting itself never is.
pub fn nn_speaker(test_painting_id: &str, train: &Corpus, index: &SimilarityIndex, seed: u64) -> Result<SpeakerOutput> {
    if train.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    let neighbors = index.query_filtered(test_painting_id, NN_SPEAKER_NEIGHBORS, |id| {
        train.painting(id).is_some_and(|p| !p.annotations.is_empty())
    })?;
    if neighbors.is_empty() {
        return Err(Error::Empty("indexed training paintings"));
    }
    if neighbors.len() < NN_SPEAKER_NEIGHBORS {
        warn!(painting_id = test_painting_id, found = neighbors.len(), "fewer than 3 training neighbours available");
    }
    let pool: Vec<(&str, &str)> = neighbors
        .iter()
        .flat_map(|n| {
            let p = train.painting(&n.painting_id).expect("filtered to training paintings");
            p.annotations.iter().map(move |a| (p.id.as_str(), a.utterance.as_str()))
        })
        .collect();
    let (source, utterance) = pool[painting_rng(seed, test_painting_id).random_range(0..pool.len())];
    Ok(SpeakerOutput {
        painting_id: test_painting_id.to_string(),
        utterance: utterance.to_string(),
        source_painting: source.to_string(),
        neighbors: neighbors.into_iter().map(|n| n.painting_id).collect(),
    })
}
