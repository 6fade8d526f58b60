//! A small typed client for the annotation service's JSON API.

use emobalance_service::{
    ContrastiveExport, NextTask, ReviewRequest, ReviewStatus, Stats, Submission, SubmissionRequest, Verdict,
};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct ApiClient {
    http: reqwest::Client,
    base: String,
}

impl ApiClient {
    pub fn new(base_url: &str) -> Self {
        ApiClient { http: reqwest::Client::new(), base: base_url.trim_end_matches('/').to_string() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> CliResult<T> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let body: serde_json::Value = resp.json().await.unwrap_or_default();
        let message = body.get("message").and_then(|m| m.as_str()).unwrap_or("no message").to_string();
        Err(CliError::Api { status: status.as_u16(), message })
    }

    /// Registers `worker_id`; an already registered id is not an error.
    pub async fn register(&self, worker_id: &str) -> CliResult<()> {
        let resp =
            self.http.post(format!("{}/workers", self.base)).json(&json!({ "worker_id": worker_id })).send().await?;
        match Self::decode::<serde_json::Value>(resp).await {
            Ok(_) | Err(CliError::Api { status: 409, .. }) => Ok(()),
            Err(e) => Err(e),
        }
    }

    pub async fn next_task(&self, worker_id: &str) -> CliResult<NextTask> {
        let resp = self.http.get(format!("{}/tasks/next", self.base)).query(&[("worker", worker_id)]).send().await?;
        Self::decode(resp).await
    }

    pub async fn submit(&self, req: &SubmissionRequest) -> CliResult<Submission> {
        Self::decode(self.http.post(format!("{}/submissions", self.base)).json(req).send().await?).await
    }

    pub async fn submissions(&self, status: Option<ReviewStatus>) -> CliResult<Vec<Submission>> {
        let mut req = self.http.get(format!("{}/submissions", self.base));
        if let Some(status) = status {
            let s = serde_json::to_value(status).expect("serialisable");
            req = req.query(&[("status", s.as_str().unwrap_or_default())]);
        }
        Self::decode(req.send().await?).await
    }

    pub async fn review(&self, submission_id: &str, verdict: Verdict, reason: &str) -> CliResult<Submission> {
        let body = ReviewRequest { verdict, reason: reason.to_string() };
        let url = format!("{}/submissions/{submission_id}/review", self.base);
        Self::decode(self.http.post(url).json(&body).send().await?).await
    }

    pub async fn export(&self) -> CliResult<ContrastiveExport> {
        Self::decode(self.http.get(format!("{}/export/contrastive", self.base)).send().await?).await
    }

    pub async fn stats(&self) -> CliResult<Stats> {
        Self::decode(self.http.get(format!("{}/stats", self.base)).send().await?).await
    }
}
