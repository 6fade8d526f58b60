use std::path::{Path, PathBuf};
use std::sync::Arc;

use emobalance_core::corpus::{AnnotationRecord, Corpus, Source};
use emobalance_core::selector::{AnnotationTask, TaskStatus};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::clock::{Clock, SystemClock};
use crate::error::{ServiceError, ServiceResult};
use crate::log::{read_events, EventLog};
use crate::model::{
    Event, Lease, NextTask, ReviewRequest, ReviewStatus, Selection, Stats, Submission, SubmissionRequest,
    MIN_UTTERANCE_WORDS,
};
use crate::state::{Assignment, State};

pub const DEFAULT_LEASE_MS: u64 = 30 * 60 * 1000;
pub const DEFAULT_GRACE_MS: u64 = 5 * 60 * 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub lease_ms: u64,
    /// How long after expiry a lease holder may still submit.
    pub grace_ms: u64,
    pub log_path: Option<PathBuf>,
    pub snapshot_path: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { lease_ms: DEFAULT_LEASE_MS, grace_ms: DEFAULT_GRACE_MS, log_path: None, snapshot_path: None }
    }
}

/// Approved painting selections as corpus records, plus the number of NO_IMAGE answers
/// (approved ones, like the records).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveExport {
    pub no_image_count: usize,
    pub annotations: Vec<AnnotationRecord>,
}

impl ContrastiveExport {
    /// Approved submissions of `state`, in submission order.
    pub fn from_state(state: &State) -> Self {
        let mut annotations = Vec::new();
        let mut no_image_count = 0;
        for s in state.submissions.iter().filter(|s| s.review_status == ReviewStatus::Approved) {
            let Selection::Painting(painting_id) = &s.selection else {
                no_image_count += 1;
                continue;
            };
            let query = state.task(&s.task_id).map(|t| t.task.candidate_set.query_id.clone());
            let (Some(emotion), Some(utterance)) = (s.emotion, s.utterance.clone()) else {
                warn!(submission = %s.submission_id, "approved painting selection without emotion or utterance");
                continue;
            };
            annotations.push(AnnotationRecord {
                painting_id: painting_id.clone(),
                art_style: String::new(),
                image_ref: String::new(),
                emotion,
                utterance,
                source: Source::Contrastive,
                worker_id: Some(s.worker_id.clone()),
                query_painting_id: query,
            });
        }
        ContrastiveExport { no_image_count, annotations }
    }

    pub fn into_corpus(self, name: &str) -> emobalance_core::Result<Corpus> {
        Corpus::from_records(name, self.annotations)
    }
}

struct Inner {
    state: State,
    log: Option<EventLog>,
}

impl Inner {
    /// Write-ahead: the event reaches the log before the in-memory state changes.
    fn commit(&mut self, event: Event) -> ServiceResult<()> {
        if let Some(log) = &mut self.log {
            log.append(&event)?;
        }
        self.state.apply(&event).map_err(ServiceError::Conflict)
    }
}

/// The annotation service. All mutations are serialised through one lock, which makes
/// assignment and completion counting linearizable.
pub struct AnnotationService {
    inner: Mutex<Inner>,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
}

impl AnnotationService {
    /// A service without persistence.
    pub fn in_memory(tasks: Vec<AnnotationTask>, clock: Arc<dyn Clock>) -> Self {
        AnnotationService {
            inner: Mutex::new(Inner { state: State::new(tasks), log: None }),
            clock,
            config: ServiceConfig::default(),
        }
    }

    /// Opens a persistent service: state is the snapshot (when present and consistent with
    /// the log) plus every logged event after it, applied over `tasks`.
    pub fn open(tasks: Vec<AnnotationTask>, config: ServiceConfig, clock: Arc<dyn Clock>) -> ServiceResult<Self> {
        let mut state = State::new(tasks);
        let mut log = None;
        if let Some(path) = &config.log_path {
            let events = read_events(path)?;
            if let Some(snap) = config.snapshot_path.as_deref().and_then(|p| load_snapshot(p, &state, events.len())) {
                state = snap;
            }
            let skip = state.events_applied as usize;
            for (i, event) in events.iter().enumerate().skip(skip) {
                state.apply(event).map_err(|message| ServiceError::CorruptLog {
                    path: path.clone(),
                    line: i + 1,
                    message,
                })?;
            }
            info!(path = %path.display(), events = events.len(), from_snapshot = skip, "replayed event log");
            log = Some(EventLog::open(path)?);
        }
        Ok(AnnotationService { inner: Mutex::new(Inner { state, log }), clock, config })
    }

    pub fn with_system_clock(tasks: Vec<AnnotationTask>, config: ServiceConfig) -> ServiceResult<Self> {
        Self::open(tasks, config, Arc::new(SystemClock))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn register_worker(&self, worker_id: &str) -> ServiceResult<()> {
        let worker_id = worker_id.trim();
        if worker_id.is_empty() {
            return Err(ServiceError::Validation("worker id must not be empty".into()));
        }
        let mut inner = self.inner.lock();
        if inner.state.workers.contains_key(worker_id) {
            return Err(ServiceError::Conflict(format!("worker `{worker_id}` is already registered")));
        }
        inner.commit(Event::WorkerRegistered { worker_id: worker_id.to_string(), at: self.now() })
    }

    pub fn next_task(&self, worker_id: &str) -> ServiceResult<NextTask> {
        let now = self.now();
        let mut inner = self.inner.lock();
        if !inner.state.workers.contains_key(worker_id) {
            return Err(ServiceError::not_found("worker", worker_id));
        }
        let i = match inner.state.assignment(worker_id, now) {
            Assignment::None => return Ok(NextTask { available: false, task: None, lease: None }),
            Assignment::Existing(i) => i,
            Assignment::New(i) => {
                let lease = Lease {
                    task_id: inner.state.tasks[i].task.task_id.clone(),
                    worker_id: worker_id.to_string(),
                    lease_expiry: now + self.config.lease_ms,
                };
                inner.commit(Event::LeaseGranted { lease, at: now })?;
                i
            }
        };
        Ok(NextTask {
            available: true,
            task: Some(inner.state.tasks[i].task.clone()),
            lease: inner.state.lease_of(i, worker_id),
        })
    }

    pub fn submit(&self, req: SubmissionRequest) -> ServiceResult<Submission> {
        let now = self.now();
        let mut inner = self.inner.lock();
        let state = &inner.state;
        if !state.workers.contains_key(&req.worker_id) {
            return Err(ServiceError::not_found("worker", &req.worker_id));
        }
        let task = state.task(&req.task_id).ok_or_else(|| ServiceError::not_found("task", &req.task_id))?;
        if task.submitted_by.contains(&req.worker_id) {
            return Err(ServiceError::Conflict(format!(
                "worker `{}` already submitted to `{}`",
                req.worker_id, req.task_id
            )));
        }
        if task.task.status == TaskStatus::Retired {
            return Err(ServiceError::Conflict(format!("task `{}` is retired", req.task_id)));
        }
        match task.leases.get(&req.worker_id) {
            None => {
                return Err(ServiceError::Conflict(format!(
                    "worker `{}` holds no lease on `{}`",
                    req.worker_id, req.task_id
                )))
            }
            Some(&expiry) if now > expiry + self.config.grace_ms => {
                return Err(ServiceError::Conflict(format!("lease on `{}` expired", req.task_id)))
            }
            Some(_) => {}
        }
        validate_answer(&req, &task.task)?;
        let submission = Submission {
            submission_id: state.next_submission_id(),
            task_id: req.task_id,
            worker_id: req.worker_id,
            selection: req.selection,
            emotion: req.emotion,
            utterance: req.utterance.map(|u| u.trim().to_string()),
            timestamp: now,
            review_status: ReviewStatus::Pending,
            review_reason: None,
        };
        inner.commit(Event::SubmissionAccepted { submission: submission.clone() })?;
        Ok(submission)
    }

    pub fn review(&self, submission_id: &str, req: ReviewRequest) -> ServiceResult<Submission> {
        let now = self.now();
        let mut inner = self.inner.lock();
        let sub = inner
            .state
            .submission(submission_id)
            .ok_or_else(|| ServiceError::not_found("submission", submission_id))?;
        if sub.review_status != ReviewStatus::Pending {
            return Err(ServiceError::Conflict(format!("submission `{submission_id}` was already reviewed")));
        }
        inner.commit(Event::Reviewed {
            submission_id: submission_id.to_string(),
            verdict: req.verdict,
            reason: req.reason,
            at: now,
        })?;
        Ok(inner.state.submission(submission_id).expect("just reviewed").clone())
    }

    /// Builds the export from a copy of the state, so the lock is held only for the clone.
    pub fn export_contrastive(&self) -> ContrastiveExport {
        ContrastiveExport::from_state(&self.state())
    }

    pub fn stats(&self) -> Stats {
        let now = self.now();
        self.inner.lock().state.stats(now)
    }

    pub fn state(&self) -> State {
        self.inner.lock().state.clone()
    }

    pub fn submissions(&self) -> Vec<Submission> {
        self.inner.lock().state.submissions.clone()
    }

    /// Writes the current state to the snapshot path (if configured) and fsyncs the log.
    pub fn checkpoint(&self) -> ServiceResult<()> {
        let mut inner = self.inner.lock();
        if let Some(log) = &mut inner.log {
            log.sync()?;
        }
        if let Some(path) = &self.config.snapshot_path {
            let tmp = path.with_extension("tmp");
            let body = serde_json::to_vec(&inner.state).expect("state serialises");
            std::fs::write(&tmp, body)
                .and_then(|_| std::fs::rename(&tmp, path))
                .map_err(|e| ServiceError::log(path, e))?;
        }
        Ok(())
    }
}

fn validate_answer(req: &SubmissionRequest, task: &AnnotationTask) -> ServiceResult<()> {
    let invalid = |m: String| Err(ServiceError::Validation(m));
    match &req.selection {
        Selection::NoImage => {
            if req.emotion.is_some() || req.utterance.as_deref().is_some_and(|u| !u.trim().is_empty()) {
                return invalid("a NO_IMAGE answer carries no emotion or utterance".into());
            }
        }
        Selection::Painting(id) => {
            if !task.candidate_set.contains(id) {
                return invalid(format!("`{id}` is not a candidate of `{}`", task.task_id));
            }
            let wanted = task.candidate_set.query_sentiment.opposite();
            let Some(emotion) = req.emotion else {
                return invalid("an emotion is required".into());
            };
            if Some(emotion.sentiment()) != wanted {
                return invalid(format!(
                    "emotion `{emotion}` must be {} (opposite of the query)",
                    wanted.map_or("n/a", |s| s.as_str())
                ));
            }
            let words = req.utterance.as_deref().map_or(0, |u| u.split_whitespace().count());
            if words < MIN_UTTERANCE_WORDS {
                return invalid(format!("utterance has {words} words; at least {MIN_UTTERANCE_WORDS} required"));
            }
        }
    }
    Ok(())
}

fn load_snapshot(path: &Path, fresh: &State, log_len: usize) -> Option<State> {
    let bytes = std::fs::read(path).ok()?;
    let snap: State = match serde_json::from_slice(&bytes) {
        Ok(s) => s,
        Err(e) => {
            warn!(path = %path.display(), error = %e, "ignoring unreadable snapshot");
            return None;
        }
    };
    let same_tasks = snap.tasks.len() == fresh.tasks.len()
        && snap.tasks.iter().zip(&fresh.tasks).all(|(a, b)| a.task.task_id == b.task.task_id);
    if !same_tasks || snap.events_applied as usize > log_len {
        warn!(path = %path.display(), "snapshot does not match the task manifest or log; replaying from scratch");
        return None;
    }
    Some(snap)
}

#[cfg(test)]
mod tests {
    use emobalance_core::corpus::{EmotionLabel, Sentiment};
    use emobalance_core::selector::{CandidateSet, CandidateSlot, Provenance};

    use super::*;
    use crate::clock::ManualClock;
    use crate::model::Verdict;

    fn task(query: &str, sentiment: Sentiment, required: u32) -> AnnotationTask {
        let slots = (0..24)
            .map(|i| CandidateSlot {
                painting_id: format!("{query}-c{i:02}"),
                provenance: if i < 12 { Provenance::Nearest } else { Provenance::HighScore },
                distance: i as f64 / 100.0,
            })
            .collect();
        AnnotationTask::new(
            CandidateSet { query_id: query.into(), query_sentiment: sentiment, slots, includes_no_image: true },
            required,
        )
    }

    fn service(tasks: Vec<AnnotationTask>) -> (AnnotationService, ManualClock) {
        let clock = ManualClock::new(1_000_000);
        (AnnotationService::in_memory(tasks, Arc::new(clock.clone())), clock)
    }

    fn answer(task: &str, worker: &str, pick: &str, emotion: EmotionLabel, words: usize) -> SubmissionRequest {
        SubmissionRequest {
            task_id: task.into(),
            worker_id: worker.into(),
            selection: Selection::Painting(pick.into()),
            emotion: Some(emotion),
            utterance: Some(vec!["word"; words].join(" ")),
        }
    }

    fn no_image(task: &str, worker: &str) -> SubmissionRequest {
        SubmissionRequest {
            task_id: task.into(),
            worker_id: worker.into(),
            selection: Selection::NoImage,
            emotion: None,
            utterance: None,
        }
    }

    #[test]
    fn one_open_task_goes_to_fresh_worker() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 5)]);
        svc.register_worker("w1").unwrap();
        let next = svc.next_task("w1").unwrap();
        assert!(next.available);
        assert_eq!(next.task.unwrap().task_id, "task-q1");
        assert_eq!(next.lease.unwrap().lease_expiry, 1_000_000 + DEFAULT_LEASE_MS);
    }

    #[test]
    fn asking_again_returns_the_same_lease() {
        let (svc, clock) = service(vec![task("q1", Sentiment::Positive, 5), task("q2", Sentiment::Positive, 5)]);
        svc.register_worker("w1").unwrap();
        let a = svc.next_task("w1").unwrap();
        clock.advance(1000);
        let b = svc.next_task("w1").unwrap();
        assert_eq!(a, b);
        assert_eq!(svc.state().events_applied, 2);
    }

    #[test]
    fn exhausted_worker_gets_nothing() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 5)]);
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        svc.submit(no_image("task-q1", "w1")).unwrap();
        let next = svc.next_task("w1").unwrap();
        assert!(!next.available && next.task.is_none() && next.lease.is_none());
    }

    #[test]
    fn unknown_worker_is_not_found() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 5)]);
        assert_eq!(svc.next_task("ghost").unwrap_err().status(), 404);
    }

    #[test]
    fn duplicate_registration_conflicts() {
        let (svc, _) = service(vec![]);
        svc.register_worker("w1").unwrap();
        assert_eq!(svc.register_worker("w1").unwrap_err().status(), 409);
        assert_eq!(svc.register_worker("  ").unwrap_err().status(), 400);
    }

    #[test]
    fn opposite_sentiment_answer_accepted() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 5)]);
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        let s = svc.submit(answer("task-q1", "w1", "q1-c03", EmotionLabel::Fear, 12)).unwrap();
        assert_eq!(s.review_status, ReviewStatus::Pending);
        assert_eq!(svc.state().task("task-q1").unwrap().task.completed_submissions, 1);
    }

    #[test]
    fn validation_errors() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 5)]);
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        let cases = [
            answer("task-q1", "w1", "q1-c03", EmotionLabel::Awe, 12),
            answer("task-q1", "w1", "q1-c03", EmotionLabel::SomethingElse, 12),
            answer("task-q1", "w1", "elsewhere", EmotionLabel::Fear, 12),
            answer("task-q1", "w1", "q1-c03", EmotionLabel::Fear, 4),
            SubmissionRequest { emotion: None, ..answer("task-q1", "w1", "q1-c03", EmotionLabel::Fear, 12) },
            SubmissionRequest { emotion: Some(EmotionLabel::Fear), ..no_image("task-q1", "w1") },
            SubmissionRequest { utterance: Some("nothing here fits at all".into()), ..no_image("task-q1", "w1") },
        ];
        for req in cases {
            assert_eq!(svc.submit(req.clone()).unwrap_err().status(), 400, "{req:?}");
        }
        assert_eq!(svc.state().submissions.len(), 0);
        // Negative query: only positive emotions are allowed.
        let (svc, _) = service(vec![task("q2", Sentiment::Negative, 5)]);
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        assert_eq!(svc.submit(answer("task-q2", "w1", "q2-c00", EmotionLabel::Sadness, 6)).unwrap_err().status(), 400);
        svc.submit(answer("task-q2", "w1", "q2-c00", EmotionLabel::Contentment, 6)).unwrap();
    }

    #[test]
    fn no_image_is_accepted_and_counted() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 1)]);
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        svc.submit(no_image("task-q1", "w1")).unwrap();
        let t = svc.state().task("task-q1").unwrap().task.clone();
        assert_eq!((t.completed_submissions, t.status), (1, TaskStatus::Complete));
    }

    #[test]
    fn duplicate_submission_conflicts() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 5)]);
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        svc.submit(no_image("task-q1", "w1")).unwrap();
        assert_eq!(svc.submit(no_image("task-q1", "w1")).unwrap_err().status(), 409);
    }

    #[test]
    fn lease_rules() {
        let (svc, clock) = service(vec![task("q1", Sentiment::Positive, 5)]);
        svc.register_worker("w1").unwrap();
        assert_eq!(svc.submit(no_image("task-q1", "w1")).unwrap_err().status(), 409, "no lease");
        svc.next_task("w1").unwrap();
        clock.advance(DEFAULT_LEASE_MS + DEFAULT_GRACE_MS + 1);
        assert_eq!(svc.submit(no_image("task-q1", "w1")).unwrap_err().status(), 409, "past grace");
        // Within grace is fine.
        svc.next_task("w1").unwrap();
        clock.advance(DEFAULT_LEASE_MS + DEFAULT_GRACE_MS);
        svc.submit(no_image("task-q1", "w1")).unwrap();
    }

    #[test]
    fn capacity_counts_leases_and_expiry_frees_them() {
        let (svc, clock) = service(vec![task("q1", Sentiment::Positive, 1)]);
        for w in ["w1", "w2"] {
            svc.register_worker(w).unwrap();
        }
        assert!(svc.next_task("w1").unwrap().available);
        assert!(!svc.next_task("w2").unwrap().available);
        clock.advance(DEFAULT_LEASE_MS);
        assert!(svc.next_task("w2").unwrap().available);
    }

    #[test]
    fn least_completed_task_first() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 3), task("q2", Sentiment::Positive, 3)]);
        for w in ["w1", "w2", "w3"] {
            svc.register_worker(w).unwrap();
        }
        let a = svc.next_task("w1").unwrap().task.unwrap().task_id;
        let b = svc.next_task("w2").unwrap().task.unwrap().task_id;
        assert_ne!(a, b);
        assert_eq!(a, "task-q1");
    }

    #[test]
    fn review_flow() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 1)]);
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        let s = svc.submit(answer("task-q1", "w1", "q1-c00", EmotionLabel::Anger, 5)).unwrap();
        assert_eq!(svc.state().task("task-q1").unwrap().task.status, TaskStatus::Complete);
        let r = svc
            .review(&s.submission_id, ReviewRequest { verdict: Verdict::Rejected, reason: "off topic".into() })
            .unwrap();
        assert_eq!(r.review_status, ReviewStatus::Rejected);
        assert_eq!(svc.state().task("task-q1").unwrap().task.status, TaskStatus::Open, "task reopens");
        let again = svc.review(&s.submission_id, ReviewRequest { verdict: Verdict::Approved, reason: String::new() });
        assert_eq!(again.unwrap_err().status(), 409);
        assert_eq!(
            svc.review("sub-9", ReviewRequest { verdict: Verdict::Approved, reason: String::new() })
                .unwrap_err()
                .status(),
            404
        );
        svc.state().check_invariants().unwrap();
    }

    #[test]
    fn export_counts() {
        let (svc, _) = service(vec![task("q1", Sentiment::Positive, 5)]);
        assert_eq!(svc.export_contrastive(), ContrastiveExport { no_image_count: 0, annotations: vec![] });
        for (i, w) in ["w1", "w2", "w3", "w4", "w5"].iter().enumerate() {
            svc.register_worker(w).unwrap();
            svc.next_task(w).unwrap();
            let req =
                if i == 3 { no_image("task-q1", w) } else { answer("task-q1", w, "q1-c05", EmotionLabel::Sadness, 7) };
            let s = svc.submit(req).unwrap();
            let verdict = if i == 4 { Verdict::Rejected } else { Verdict::Approved };
            svc.review(&s.submission_id, ReviewRequest { verdict, reason: String::new() }).unwrap();
        }
        let out = svc.export_contrastive();
        assert_eq!(out.no_image_count, 1);
        assert_eq!(out.annotations.len(), 3);
        for a in &out.annotations {
            assert_eq!(a.source, Source::Contrastive);
            assert_eq!(a.query_painting_id.as_deref(), Some("q1"));
            assert_eq!(a.emotion.sentiment(), Sentiment::Negative);
        }
        let corpus = out.into_corpus("contrastive").unwrap();
        assert_eq!(corpus.annotation_count(), 3);
    }

    #[test]
    fn persistent_state_survives_restart() {
        let dir = tempfile::tempdir().unwrap();
        let config = ServiceConfig {
            log_path: Some(dir.path().join("events.jsonl")),
            snapshot_path: Some(dir.path().join("snapshot.json")),
            ..ServiceConfig::default()
        };
        let tasks = vec![task("q1", Sentiment::Positive, 2), task("q2", Sentiment::Negative, 2)];
        let clock = ManualClock::new(5);
        let svc = AnnotationService::open(tasks.clone(), config.clone(), Arc::new(clock.clone())).unwrap();
        svc.register_worker("w1").unwrap();
        svc.next_task("w1").unwrap();
        svc.checkpoint().unwrap();
        svc.submit(no_image("task-q1", "w1")).unwrap();
        let before = svc.state();
        drop(svc);
        // Snapshot + tail of the log.
        let reopened = AnnotationService::open(tasks.clone(), config.clone(), Arc::new(clock.clone())).unwrap();
        assert_eq!(reopened.state(), before);
        drop(reopened);
        // Log alone.
        std::fs::remove_file(config.snapshot_path.as_ref().unwrap()).unwrap();
        let replayed = AnnotationService::open(tasks, config, Arc::new(clock)).unwrap();
        assert_eq!(replayed.state(), before);
    }
}
