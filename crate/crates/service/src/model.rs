use emobalance_core::corpus::EmotionLabel;
use emobalance_core::selector::AnnotationTask;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Explanations shorter than this many words are rejected.
pub const MIN_UTTERANCE_WORDS: usize = 5;

const NO_IMAGE: &str = "NO_IMAGE";

/// What the worker picked: one of the candidates, or "no candidate is similar enough".
/// On the wire this is either the painting id or the literal `"NO_IMAGE"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Selection {
    NoImage,
    Painting(String),
}

impl Selection {
    pub fn painting_id(&self) -> Option<&str> {
        match self {
            Selection::Painting(id) => Some(id),
            Selection::NoImage => None,
        }
    }
}

impl Serialize for Selection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.painting_id().unwrap_or(NO_IMAGE))
    }
}

impl<'de> Deserialize<'de> for Selection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s == NO_IMAGE { Selection::NoImage } else { Selection::Painting(s) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Pending,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub submission_id: String,
    pub task_id: String,
    pub worker_id: String,
    pub selection: Selection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<EmotionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub review_status: ReviewStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub task_id: String,
    pub worker_id: String,
    pub lease_expiry: u64,
}

/// Everything that changes service state. The log is a sequence of these, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    WorkerRegistered { worker_id: String, at: u64 },
    LeaseGranted { lease: Lease, at: u64 },
    SubmissionAccepted { submission: Submission },
    Reviewed { submission_id: String, verdict: Verdict, reason: String, at: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkerRequest {
    pub worker_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmissionRequest {
    pub task_id: String,
    pub worker_id: String,
    pub selection: Selection,
    #[serde(default)]
    pub emotion: Option<EmotionLabel>,
    #[serde(default)]
    pub utterance: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewRequest {
    pub verdict: Verdict,
    #[serde(default)]
    pub reason: String,
}

/// Response of `GET /tasks/next`. `task` and `lease` are absent when nothing is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextTask {
    pub available: bool,
    pub task: Option<AnnotationTask>,
    pub lease: Option<Lease>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub workers: usize,
    pub tasks: usize,
    pub open_tasks: usize,
    pub complete_tasks: usize,
    pub active_leases: usize,
    pub submissions: usize,
    pub pending: usize,
    pub approved: usize,
    pub rejected: usize,
    pub no_image: usize,
}
