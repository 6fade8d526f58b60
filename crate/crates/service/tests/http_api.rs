//! The JSON API over a live socket.

mod common;

use std::sync::Arc;

use emobalance_service::{AnnotationService, ManualClock, NextTask, RouterOptions, Stats, Submission};
use reqwest::StatusCode;
use serde_json::{json, Value};

use common::{tasks, Server};

async fn start(n_tasks: usize, required: u32, options: RouterOptions) -> (Server, Arc<AnnotationService>) {
    let svc = Arc::new(AnnotationService::in_memory(tasks(n_tasks, required), Arc::new(ManualClock::new(1))));
    (Server::start(svc.clone(), options).await, svc)
}

#[tokio::test]
async fn full_round_trip() {
    let (server, _) = start(2, 1, RouterOptions::default()).await;
    let http = reqwest::Client::new();

    let r = http.post(server.url("/workers")).json(&json!({"worker_id": "w1"})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    let r = http.post(server.url("/workers")).json(&json!({"worker_id": "w1"})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CONFLICT);
    assert_eq!(r.json::<Value>().await.unwrap()["error"], "conflict");

    let next: NextTask = http.get(server.url("/tasks/next?worker=w1")).send().await.unwrap().json().await.unwrap();
    let task = next.task.unwrap();
    assert_eq!(task.task_id, "task-q000");
    assert_eq!(task.candidate_set.slots.len(), 24);
    assert!(next.lease.is_some());

    // q000 is a negative query: a negative emotion is rejected, a positive one accepted.
    let bad = json!({"task_id": "task-q000", "worker_id": "w1", "selection": "q000-c01", "emotion": "fear", "utterance": "one two three four five"});
    let r = http.post(server.url("/submissions")).json(&bad).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    let good = json!({"task_id": "task-q000", "worker_id": "w1", "selection": "q000-c01", "emotion": "awe", "utterance": "the light makes it feel holy"});
    let r = http.post(server.url("/submissions")).json(&good).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    let sub: Submission = r.json().await.unwrap();
    let r = http.post(server.url("/submissions")).json(&good).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CONFLICT);

    let r = http
        .post(server.url(&format!("/submissions/{}/review", sub.submission_id)))
        .json(&json!({"verdict": "approved"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let r = http
        .post(server.url(&format!("/submissions/{}/review", sub.submission_id)))
        .json(&json!({"verdict": "rejected"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::CONFLICT);
    let r =
        http.post(server.url("/submissions/nope/review")).json(&json!({"verdict": "approved"})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);

    // Second task, NO_IMAGE.
    let next: NextTask = http.get(server.url("/tasks/next?worker=w1")).send().await.unwrap().json().await.unwrap();
    let id = next.task.unwrap().task_id;
    let r = http
        .post(server.url("/submissions"))
        .json(&json!({"task_id": id, "worker_id": "w1", "selection": "NO_IMAGE"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    let next: NextTask = http.get(server.url("/tasks/next?worker=w1")).send().await.unwrap().json().await.unwrap();
    assert!(!next.available);

    let pending: Vec<Submission> =
        http.get(server.url("/submissions?status=pending")).send().await.unwrap().json().await.unwrap();
    assert_eq!(pending.len(), 1);
    assert_eq!(pending[0].selection, emobalance_service::Selection::NoImage);
    let all: Vec<Submission> = http.get(server.url("/submissions")).send().await.unwrap().json().await.unwrap();
    assert_eq!(all.len(), 2);

    let export: Value = http.get(server.url("/export/contrastive")).send().await.unwrap().json().await.unwrap();
    assert_eq!(export["no_image_count"], 0, "the NO_IMAGE answer is still pending");
    assert_eq!(export["annotations"].as_array().unwrap().len(), 1);
    assert_eq!(export["annotations"][0]["source"], "contrastive");
    assert_eq!(export["annotations"][0]["query_painting_id"], "q000");

    let stats: Stats = http.get(server.url("/stats")).send().await.unwrap().json().await.unwrap();
    assert_eq!(
        (stats.workers, stats.tasks, stats.complete_tasks, stats.submissions, stats.approved, stats.no_image),
        (1, 2, 2, 2, 1, 1)
    );
    server.stop().await;
}

#[tokio::test]
async fn error_statuses() {
    let (server, _) = start(1, 1, RouterOptions::default()).await;
    let http = reqwest::Client::new();
    let r = http.get(server.url("/tasks/next?worker=ghost")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let r = http.post(server.url("/workers")).json(&json!({"worker_id": ""})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    http.post(server.url("/workers")).json(&json!({"worker_id": "w"})).send().await.unwrap();
    let r = http
        .post(server.url("/submissions"))
        .json(&json!({"task_id": "task-missing", "worker_id": "w", "selection": "NO_IMAGE"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let r = http.get(server.url("/images/q000")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND, "no image directory configured");
    server.stop().await;
}

#[tokio::test]
async fn static_images_and_ui() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("q000-c01.png"), b"\x89PNG fake").unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>ui</html>").unwrap();
    let options = RouterOptions { image_dir: Some(dir.path().into()), ui_dir: Some(ui.path().into()) };
    let (server, _) = start(1, 1, options).await;
    let http = reqwest::Client::new();
    let r = http.get(server.url("/images/q000-c01")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    assert_eq!(r.headers()["content-type"], "image/png");
    assert_eq!(r.bytes().await.unwrap().as_ref(), b"\x89PNG fake");
    assert_eq!(http.get(server.url("/images/.hidden")).send().await.unwrap().status(), StatusCode::NOT_FOUND);
    let r = http.get(server.url("/index.html")).send().await.unwrap();
    assert_eq!(r.text().await.unwrap(), "<html>ui</html>");
    server.stop().await;
}
