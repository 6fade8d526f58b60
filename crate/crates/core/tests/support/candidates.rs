//! Small candidate-selection corpora and a direct enumeration of the slot rules.

use std::collections::HashSet;

use emobalance_core::corpus::{Annotation, Corpus, EmotionLabel, FeatureSet, FeatureVector};
use emobalance_core::index::SimilarityIndex;
use emobalance_core::selector::{Provenance, SelectorConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub corpus: Corpus,
    pub index: SimilarityIndex,
    pub vectors: Vec<(String, Vec<f64>)>,
    pub scores: Vec<(String, f64)>,
}

pub fn fixture(n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::new("protocol");
    let mut vectors = Vec::new();
    let mut scores = Vec::new();
    for i in 0..n {
        let id = format!("p{i:02}");
        let (mut pos, mut neg) = (0i32, 0i32);
        let count = rng.random_range(1..=5);
        for j in 0..count {
            let emotion = EmotionLabel::ALL[rng.random_range(0..9)];
            match emotion.index() {
                _ if EmotionLabel::POSITIVE.contains(&emotion) => pos += 1,
                _ if EmotionLabel::NEGATIVE.contains(&emotion) => neg += 1,
                _ => {}
            }
            corpus.push_annotation("", "", Annotation::original(id.clone(), emotion, format!("c{j}")));
        }
        scores.push((id.clone(), (pos - neg) as f64 / count as f64));
        // Small integer lattice: many exact duplicates and therefore exact distance ties.
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(1..4) as f64).collect();
        vectors.push((id, v));
    }
    let set = FeatureSet::from_vectors(
        vectors.iter().map(|(id, v)| FeatureVector::new(id.clone(), v.iter().map(|&x| x as f32).collect())),
    )
    .unwrap();
    corpus.attach_features(set.clone());
    let index = SimilarityIndex::build(&set).unwrap();
    Fixture { corpus, index, vectors, scores }
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (1.0 - dot / (na * nb)).max(0.0)
}

/// Direct statement of the rules: the `neighbors` nearest form the pool; the `near` nearest
/// fill the first slots; then the same-sign pool members with the largest |score| (ties by
/// distance, then id); any shortfall comes from the next-nearest unused pool members.
pub fn reference(f: &Fixture, query: &str, cfg: &SelectorConfig) -> Vec<(String, Provenance)> {
    let qv = &f.vectors.iter().find(|(id, _)| id == query).unwrap().1;
    let score = |id: &str| f.scores.iter().find(|(i, _)| i == id).unwrap().1;
    let qs = score(query);
    let mut pool: Vec<(f64, String)> =
        f.vectors.iter().filter(|(id, _)| id != query).map(|(id, v)| (cosine_distance(qv, v), id.clone())).collect();
    // Distances equal up to float noise are ties.
    pool.sort_by(|a, b| if (a.0 - b.0).abs() < 1e-6 { a.1.cmp(&b.1) } else { a.0.total_cmp(&b.0) });
    pool.truncate(cfg.neighbors);
    let mut out: Vec<(String, Provenance)> =
        pool[..cfg.near].iter().map(|(_, id)| (id.clone(), Provenance::Nearest)).collect();
    let rest = &pool[cfg.near..];
    let mut same: Vec<(usize, f64)> = rest
        .iter()
        .enumerate()
        .filter(|(_, (_, id))| score(id) * qs > 0.0)
        .map(|(i, (_, id))| (i, score(id).abs()))
        .collect();
    same.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let chosen: HashSet<usize> = same.iter().take(cfg.high_score).map(|(i, _)| *i).collect();
    for (i, _) in same.iter().take(cfg.high_score) {
        out.push((rest[*i].1.clone(), Provenance::HighScore));
    }
    for (i, (_, id)) in rest.iter().enumerate() {
        if out.len() == cfg.slot_count() {
            break;
        }
        if !chosen.contains(&i) {
            out.push((id.clone(), Provenance::Nearest));
        }
    }
    out
}
