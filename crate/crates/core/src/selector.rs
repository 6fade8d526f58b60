//! Contrastive candidate sets and the annotation tasks built from them.
//!
//! For an emotionally biased query painting the candidate set holds its `near` closest
//! paintings, followed by the `high_score` paintings among the rest of its `neighbors`
//! nearest that share the query's polarity with the largest absolute emotional score.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{identify_biased, DEFAULT_BIAS_THRESHOLD};
use crate::corpus::{Corpus, Painting, Sentiment};
use crate::index::SimilarityIndex;
use crate::{Error, Result};

pub const DEFAULT_REQUIRED_SUBMISSIONS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    /// How many nearest neighbours to retrieve per query.
    pub neighbors: usize,
    pub near: usize,
    pub high_score: usize,
    pub threshold: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig { neighbors: 100, near: 12, high_score: 12, threshold: DEFAULT_BIAS_THRESHOLD }
    }
}

impl SelectorConfig {
    pub fn slot_count(&self) -> usize {
        self.near + self.high_score
    }

    pub fn validate(&self) -> Result<()> {
        if self.near == 0 || self.high_score == 0 || self.neighbors == 0 {
            return Err(Error::InvalidParameter("selector counts must be positive".into()));
        }
        if self.neighbors < self.slot_count() {
            return Err(Error::InvalidParameter(format!(
                "neighbors={} smaller than the {} candidate slots",
                self.neighbors,
                self.slot_count()
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Nearest,
    HighScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSlot {
    pub painting_id: String,
    pub provenance: Provenance,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub query_id: String,
    pub query_sentiment: Sentiment,
    pub slots: Vec<CandidateSlot>,
    pub includes_no_image: bool,
}

impl CandidateSet {
    pub fn contains(&self, painting_id: &str) -> bool {
        self.slots.iter().any(|s| s.painting_id == painting_id)
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.slots.iter().filter(|s| s.provenance == provenance).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Open,
    Complete,
    Retired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub candidate_set: CandidateSet,
    pub required_submissions: u32,
    pub completed_submissions: u32,
    pub status: TaskStatus,
}

impl AnnotationTask {
    pub fn new(candidate_set: CandidateSet, required_submissions: u32) -> Self {
        AnnotationTask {
            task_id: format!("task-{}", candidate_set.query_id),
            candidate_set,
            required_submissions,
            completed_submissions: 0,
            status: TaskStatus::Open,
        }
    }

    /// Recomputes `status` from the completion count; retired tasks stay retired.
    pub fn refresh_status(&mut self) {
        if self.status != TaskStatus::Retired {
            self.status = if self.completed_submissions >= self.required_submissions {
                TaskStatus::Complete
            } else {
                TaskStatus::Open
            };
        }
    }
}

fn signed_score(corpus: &Corpus, id: &str) -> Option<f64> {
    corpus.painting(id).and_then(Painting::emotional_score).map(|s| s.score)
}

pub fn assemble_candidates(
    query_id: &str,
    corpus: &Corpus,
    index: &SimilarityIndex,
    config: &SelectorConfig,
) -> Result<CandidateSet> {
    config.validate()?;
    let needed = config.slot_count() + 1;
    if corpus.painting_count() < needed {
        return Err(Error::CorpusTooSmall { found: corpus.painting_count(), needed });
    }
    let query_score = signed_score(corpus, query_id).ok_or_else(|| Error::UnknownPainting(query_id.to_string()))?;
    if query_score.abs() <= config.threshold {
        return Err(Error::NotBiased(query_id.to_string()));
    }
    if !index.contains(query_id) {
        return Err(Error::UnknownPainting(query_id.to_string()));
    }
    if index.len() < needed {
        return Err(Error::CorpusTooSmall { found: index.len(), needed });
    }
    let query_sentiment = if query_score > 0.0 { Sentiment::Positive } else { Sentiment::Negative };

    let k = config.neighbors.min(index.len() - 1);
    let neighbors = index.query(query_id, k)?.neighbors;
    let (nearest, rest) = neighbors.split_at(config.near);

    let mut slots: Vec<CandidateSlot> = nearest
        .iter()
        .map(|n| CandidateSlot {
            painting_id: n.painting_id.clone(),
            provenance: Provenance::Nearest,
            distance: n.distance,
        })
        .collect();

    let mut same_sign: Vec<(f64, usize)> = rest
        .iter()
        .enumerate()
        .filter_map(|(i, n)| {
            let s = signed_score(corpus, &n.painting_id)?;
            (s * query_score > 0.0).then_some((s.abs(), i))
        })
        .collect();
    // |score| descending, then distance, then id; `rest` is already in (distance, id) order.
    same_sign.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut used = vec![false; rest.len()];
    for &(_, i) in same_sign.iter().take(config.high_score) {
        used[i] = true;
        let n = &rest[i];
        slots.push(CandidateSlot {
            painting_id: n.painting_id.clone(),
            provenance: Provenance::HighScore,
            distance: n.distance,
        });
    }

    // Shortage: top up with the next-nearest unused neighbours.
    let missing = config.slot_count() - slots.len();
    for (_, n) in rest.iter().enumerate().filter(|(i, _)| !used[*i]).take(missing) {
        slots.push(CandidateSlot {
            painting_id: n.painting_id.clone(),
            provenance: Provenance::Nearest,
            distance: n.distance,
        });
    }

    Ok(CandidateSet { query_id: query_id.to_string(), query_sentiment, slots, includes_no_image: true })
}

/// One open task per biased painting, in a seed-determined order.
pub fn generate_tasks(
    corpus: &Corpus,
    index: &SimilarityIndex,
    config: &SelectorConfig,
    required_submissions: u32,
    seed: u64,
) -> Result<Vec<AnnotationTask>> {
    config.validate()?;
    if required_submissions == 0 {
        return Err(Error::InvalidParameter("required_submissions must be positive".into()));
    }
    let biased: Vec<String> = identify_biased(corpus, config.threshold)?.into_iter().collect();
    let mut tasks = biased
        .par_iter()
        .map(|id| {
            assemble_candidates(id, corpus, index, config).map(|set| AnnotationTask::new(set, required_submissions))
        })
        .collect::<Result<Vec<_>>>()?;
    tasks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(tasks)
}

pub fn write_task_manifest(path: impl AsRef<Path>, tasks: &[AnnotationTask]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for task in tasks {
        let line = serde_json::to_string(task).map_err(|source| Error::Json { line: 0, source })?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_task_manifest(path: impl AsRef<Path>) -> Result<Vec<AnnotationTask>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut tasks = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            tasks.push(serde_json::from_str(&line).map_err(|source| Error::Json { line: i + 1, source })?);
        }
    }
    Ok(tasks)
}
