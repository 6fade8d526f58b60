//! Annotation service: hands out contrastive tasks under time-limited leases, validates and
//! logs submissions, supports review, and exports approved work as a contrastive corpus.
//!
//! All state changes are [`Event`]s appended to a JSONL log before they are applied, so the
//! in-memory [`State`] can always be rebuilt by replaying the log over the task manifest.

mod audit;
mod clock;
mod error;
mod http;
mod log;
mod model;
mod service;
mod state;

pub use audit::{audit_events, AuditReport};
pub use clock::{Clock, ManualClock, SystemClock};
pub use error::{ServiceError, ServiceResult};
pub use http::{router, serve, RouterOptions};
pub use log::{read_events, EventLog};
pub use model::{
    Event, Lease, NextTask, ReviewRequest, ReviewStatus, Selection, Stats, Submission, SubmissionRequest, Verdict,
    WorkerRequest, MIN_UTTERANCE_WORDS,
};
pub use service::{AnnotationService, ContrastiveExport, ServiceConfig, DEFAULT_GRACE_MS, DEFAULT_LEASE_MS};
pub use state::{State, TaskState};
