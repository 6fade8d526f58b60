use std::collections::{BTreeMap, BTreeSet};

use emobalance_core::selector::{AnnotationTask, TaskStatus};
use serde::{Deserialize, Serialize};

use crate::model::{Event, Lease, ReviewStatus, Selection, Stats, Submission, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskState {
    pub task: AnnotationTask,
    /// Lease expiry per worker. Expired entries linger until overwritten; they are inert.
    pub leases: BTreeMap<String, u64>,
    /// Workers that have submitted to this task, whatever the review outcome.
    pub submitted_by: BTreeSet<String>,
}

impl TaskState {
    pub fn active_leases(&self, now: u64) -> usize {
        self.leases.values().filter(|&&expiry| expiry > now).count()
    }

    fn load(&self, now: u64) -> u64 {
        u64::from(self.task.completed_submissions) + self.active_leases(now) as u64
    }
}

/// The complete service state. Changes only through [`State::apply`], so replaying the
/// event log over the initial task list reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub tasks: Vec<TaskState>,
    task_index: BTreeMap<String, usize>,
    /// Worker id → registration time.
    pub workers: BTreeMap<String, u64>,
    pub submissions: Vec<Submission>,
    submission_index: BTreeMap<String, usize>,
    pub events_applied: u64,
}

/// What `next_task` should do for a worker.
pub(crate) enum Assignment {
    Existing(usize),
    New(usize),
    None,
}

impl State {
    pub fn new(tasks: Vec<AnnotationTask>) -> Self {
        let task_index = tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect();
        let tasks = tasks
            .into_iter()
            .map(|task| TaskState { task, leases: BTreeMap::new(), submitted_by: BTreeSet::new() })
            .collect();
        State {
            tasks,
            task_index,
            workers: BTreeMap::new(),
            submissions: Vec::new(),
            submission_index: BTreeMap::new(),
            events_applied: 0,
        }
    }

    pub fn task(&self, task_id: &str) -> Option<&TaskState> {
        self.task_index.get(task_id).map(|&i| &self.tasks[i])
    }

    pub fn submission(&self, submission_id: &str) -> Option<&Submission> {
        self.submission_index.get(submission_id).map(|&i| &self.submissions[i])
    }

    pub(crate) fn next_submission_id(&self) -> String {
        format!("sub-{:07}", self.submissions.len() + 1)
    }

    /// Applies one event. Fails only when the event refers to something that does not exist,
    /// which for a replayed log means the log does not belong to this task manifest.
    pub fn apply(&mut self, event: &Event) -> Result<(), String> {
        match event {
            Event::WorkerRegistered { worker_id, at } => {
                self.workers.insert(worker_id.clone(), *at);
            }
            Event::LeaseGranted { lease, .. } => {
                let i = self.task_position(&lease.task_id)?;
                self.tasks[i].leases.insert(lease.worker_id.clone(), lease.lease_expiry);
            }
            Event::SubmissionAccepted { submission } => {
                let i = self.task_position(&submission.task_id)?;
                let t = &mut self.tasks[i];
                t.leases.remove(&submission.worker_id);
                t.submitted_by.insert(submission.worker_id.clone());
                t.task.completed_submissions += 1;
                t.task.refresh_status();
                self.submission_index.insert(submission.submission_id.clone(), self.submissions.len());
                self.submissions.push(submission.clone());
            }
            Event::Reviewed { submission_id, verdict, reason, .. } => {
                let &s = self
                    .submission_index
                    .get(submission_id)
                    .ok_or_else(|| format!("unknown submission `{submission_id}`"))?;
                let sub = &mut self.submissions[s];
                sub.review_status = match verdict {
                    Verdict::Approved => ReviewStatus::Approved,
                    Verdict::Rejected => ReviewStatus::Rejected,
                };
                if !reason.is_empty() {
                    sub.review_reason = Some(reason.clone());
                }
                if *verdict == Verdict::Rejected {
                    let task_id = sub.task_id.clone();
                    let i = self.task_position(&task_id)?;
                    let t = &mut self.tasks[i].task;
                    t.completed_submissions = t.completed_submissions.saturating_sub(1);
                    t.refresh_status();
                }
            }
        }
        self.events_applied += 1;
        Ok(())
    }

    fn task_position(&self, task_id: &str) -> Result<usize, String> {
        self.task_index.get(task_id).copied().ok_or_else(|| format!("unknown task `{task_id}`"))
    }

    /// A worker keeps its live lease on an open task. Otherwise it gets the open task it has
    /// not submitted to with the fewest completed-plus-leased slots, provided that count is
    /// still below the requirement; manifest order breaks ties.
    pub(crate) fn assignment(&self, worker_id: &str, now: u64) -> Assignment {
        let eligible = |t: &TaskState| t.task.status == TaskStatus::Open && !t.submitted_by.contains(worker_id);
        if let Some(i) =
            self.tasks.iter().position(|t| eligible(t) && t.leases.get(worker_id).is_some_and(|&expiry| expiry > now))
        {
            return Assignment::Existing(i);
        }
        self.tasks
            .iter()
            .enumerate()
            .filter(|(_, t)| eligible(t) && t.load(now) < u64::from(t.task.required_submissions))
            .min_by_key(|(i, t)| (t.load(now), *i))
            .map_or(Assignment::None, |(i, _)| Assignment::New(i))
    }

    pub(crate) fn lease_of(&self, task: usize, worker_id: &str) -> Option<Lease> {
        let t = &self.tasks[task];
        t.leases.get(worker_id).map(|&lease_expiry| Lease {
            task_id: t.task.task_id.clone(),
            worker_id: worker_id.to_string(),
            lease_expiry,
        })
    }

    pub fn stats(&self, now: u64) -> Stats {
        let count = |s: ReviewStatus| self.submissions.iter().filter(|x| x.review_status == s).count();
        Stats {
            workers: self.workers.len(),
            tasks: self.tasks.len(),
            open_tasks: self.tasks.iter().filter(|t| t.task.status == TaskStatus::Open).count(),
            complete_tasks: self.tasks.iter().filter(|t| t.task.status == TaskStatus::Complete).count(),
            active_leases: self.tasks.iter().map(|t| t.active_leases(now)).sum(),
            submissions: self.submissions.len(),
            pending: count(ReviewStatus::Pending),
            approved: count(ReviewStatus::Approved),
            rejected: count(ReviewStatus::Rejected),
            no_image: self.submissions.iter().filter(|s| s.selection == Selection::NoImage).count(),
        }
    }

    /// Checks the bookkeeping invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let completed: u64 = self.tasks.iter().map(|t| u64::from(t.task.completed_submissions)).sum();
        let live = self.submissions.iter().filter(|s| s.review_status != ReviewStatus::Rejected).count() as u64;
        if completed != live {
            return Err(format!("task completion total {completed} != non-rejected submissions {live}"));
        }
        let mut pairs = BTreeSet::new();
        for s in &self.submissions {
            if !pairs.insert((&s.worker_id, &s.task_id)) {
                return Err(format!("worker `{}` submitted twice to `{}`", s.worker_id, s.task_id));
            }
        }
        for t in &self.tasks {
            let expected = if t.task.completed_submissions >= t.task.required_submissions {
                TaskStatus::Complete
            } else {
                TaskStatus::Open
            };
            if t.task.status != TaskStatus::Retired && t.task.status != expected {
                return Err(format!("task `{}` status {:?} disagrees with its counts", t.task.task_id, t.task.status));
            }
        }
        Ok(())
    }
}
