//! Scripted annotators that work through a live service over HTTP, and a bulk reviewer.
//!
//! Each answer is seeded by `(seed, task, worker)`, so a given worker answers a given task
//! the same way on every run; which worker receives which task still depends on scheduling
//! when more than one worker runs.

use std::collections::BTreeMap;

use emobalance_core::synthetic::{ScriptedAnnotator, ScriptedAnswer};
use emobalance_service::{ReviewStatus, Selection, SubmissionRequest, Verdict};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::client::ApiClient;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub workers: usize,
    pub no_image_rate: f64,
    pub seed: u64,
    /// Per-worker cap; `None` runs until the service has nothing left to assign.
    pub max_per_worker: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { workers: 8, no_image_rate: 0.03, seed: 0, max_per_worker: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub submissions: usize,
    pub no_image: usize,
    /// Submissions the service refused (e.g. a lease lost to expiry).
    pub refused: usize,
    pub per_worker: BTreeMap<String, usize>,
}

fn answer_seed(seed: u64, task_id: &str, worker_id: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(task_id)
        .chain_update([0])
        .chain_update(worker_id)
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

async fn run_worker(client: ApiClient, worker_id: String, cfg: SimulationConfig) -> CliResult<SimulationSummary> {
    client.register(&worker_id).await?;
    let mut summary = SimulationSummary::default();
    let mut done = 0usize;
    while cfg.max_per_worker.is_none_or(|cap| done < cap) {
        let next = client.next_task(&worker_id).await?;
        let Some(task) = next.task.filter(|_| next.available) else { break };
        let candidates: Vec<String> = task.candidate_set.slots.iter().map(|s| s.painting_id.clone()).collect();
        let mut annotator = ScriptedAnnotator::new(answer_seed(cfg.seed, &task.task_id, &worker_id), cfg.no_image_rate);
        let req = match annotator.answer(&candidates, task.candidate_set.query_sentiment) {
            ScriptedAnswer::NoImage => SubmissionRequest {
                task_id: task.task_id.clone(),
                worker_id: worker_id.clone(),
                selection: Selection::NoImage,
                emotion: None,
                utterance: None,
            },
            ScriptedAnswer::Painting { painting_id, emotion, utterance } => SubmissionRequest {
                task_id: task.task_id.clone(),
                worker_id: worker_id.clone(),
                selection: Selection::Painting(painting_id),
                emotion: Some(emotion),
                utterance: Some(utterance),
            },
        };
        match client.submit(&req).await {
            Ok(sub) => {
                summary.submissions += 1;
                summary.no_image += usize::from(sub.selection == Selection::NoImage);
            }
            Err(CliError::Api { status: 409, .. }) => summary.refused += 1,
            Err(e) => return Err(e),
        }
        done += 1;
    }
    summary.per_worker.insert(worker_id, summary.submissions);
    Ok(summary)
}

/// Runs `cfg.workers` concurrent scripted workers (`sim-00`, `sim-01`, ...) until the
/// service stops handing out tasks.
pub async fn run_annotators(client: &ApiClient, cfg: &SimulationConfig) -> CliResult<SimulationSummary> {
    if cfg.workers == 0 {
        return Err(CliError::Validation("at least one worker is required".into()));
    }
    if !(0.0..=1.0).contains(&cfg.no_image_rate) {
        return Err(CliError::Validation(format!("no-image rate {} outside [0, 1]", cfg.no_image_rate)));
    }
    let handles: Vec<_> = (0..cfg.workers)
        .map(|i| tokio::spawn(run_worker(client.clone(), format!("sim-{i:02}"), cfg.clone())))
        .collect();
    let mut total = SimulationSummary::default();
    for h in handles {
        let s = h.await.map_err(|e| CliError::Invariant(format!("worker task panicked: {e}")))??;
        total.submissions += s.submissions;
        total.no_image += s.no_image;
        total.refused += s.refused;
        total.per_worker.extend(s.per_worker);
    }
    Ok(total)
}

/// Gives every pending submission the same verdict. Returns how many were reviewed.
pub async fn review_all_pending(client: &ApiClient, verdict: Verdict, reason: &str) -> CliResult<usize> {
    let pending = client.submissions(Some(ReviewStatus::Pending)).await?;
    for sub in &pending {
        client.review(&sub.submission_id, verdict, reason).await?;
    }
    Ok(pending.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_seed_depends_on_every_part() {
        let base = answer_seed(1, "task-a", "w1");
        assert_eq!(base, answer_seed(1, "task-a", "w1"));
        assert_ne!(base, answer_seed(2, "task-a", "w1"));
        assert_ne!(base, answer_seed(1, "task-b", "w1"));
        assert_ne!(base, answer_seed(1, "task-a", "w2"));
        // The separator keeps ("ab","c") and ("a","bc") apart.
        assert_ne!(answer_seed(0, "ab", "c"), answer_seed(0, "a", "bc"));
    }
}
