#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use emobalance_core::corpus::Sentiment;
use emobalance_core::selector::{AnnotationTask, CandidateSet, CandidateSlot, Provenance};
use emobalance_service::{serve, AnnotationService, RouterOptions};
use tokio::sync::oneshot;

pub fn task(query: &str, sentiment: Sentiment, required: u32) -> AnnotationTask {
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

pub fn tasks(n: usize, required: u32) -> Vec<AnnotationTask> {
    (0..n)
        .map(|i| {
            task(&format!("q{i:03}"), if i % 3 == 0 { Sentiment::Negative } else { Sentiment::Positive }, required)
        })
        .collect()
}

pub struct Server {
    pub base: String,
    stop: Option<oneshot::Sender<()>>,
    handle: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Server {
    pub async fn start(service: Arc<AnnotationService>, options: RouterOptions) -> Server {
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel::<()>();
        let handle = tokio::spawn(serve(listener, service, options, async {
            let _ = rx.await;
        }));
        Server { base, stop: Some(tx), handle }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        self.handle.await.unwrap().unwrap();
    }
}
