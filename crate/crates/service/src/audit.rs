use emobalance_core::selector::{AnnotationTask, TaskStatus};
use serde::Serialize;

use crate::model::Event;
use crate::state::State;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub events: usize,
    pub leases: usize,
    pub submissions: usize,
    pub reviews: usize,
}

/// Replays `events` over `tasks`, checking at every step that no lease was granted to a
/// worker already holding a live lease on that task, to a worker who already submitted, on a
/// closed task, or beyond the task's remaining capacity; and that the bookkeeping
/// invariants hold after each event. Returns the final state on success.
pub fn audit_events(tasks: Vec<AnnotationTask>, events: &[Event]) -> Result<(State, AuditReport), String> {
    let mut state = State::new(tasks);
    let mut report = AuditReport::default();
    for (i, event) in events.iter().enumerate() {
        let at_event = |m: String| format!("event {}: {m}", i + 1);
        match event {
            Event::LeaseGranted { lease, at } => {
                report.leases += 1;
                if !state.workers.contains_key(&lease.worker_id) {
                    return Err(at_event(format!("lease for unregistered worker `{}`", lease.worker_id)));
                }
                let t =
                    state.task(&lease.task_id).ok_or_else(|| at_event(format!("unknown task `{}`", lease.task_id)))?;
                if t.leases.get(&lease.worker_id).is_some_and(|&expiry| expiry > *at) {
                    return Err(at_event(format!(
                        "double lease: `{}` already holds `{}`",
                        lease.worker_id, lease.task_id
                    )));
                }
                if t.submitted_by.contains(&lease.worker_id) {
                    return Err(at_event(format!(
                        "`{}` re-leased `{}` after submitting",
                        lease.worker_id, lease.task_id
                    )));
                }
                if t.task.status != TaskStatus::Open {
                    return Err(at_event(format!("lease on closed task `{}`", lease.task_id)));
                }
                let load = t.task.completed_submissions as usize + t.active_leases(*at);
                if load >= t.task.required_submissions as usize {
                    return Err(at_event(format!("over-leased `{}`: load {load}", lease.task_id)));
                }
            }
            Event::SubmissionAccepted { .. } => report.submissions += 1,
            Event::Reviewed { .. } => report.reviews += 1,
            Event::WorkerRegistered { .. } => {}
        }
        state.apply(event).map_err(at_event)?;
        state.check_invariants().map_err(at_event)?;
        report.events += 1;
    }
    Ok((state, report))
}
