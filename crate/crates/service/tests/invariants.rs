//! Random operation sequences (including clock jumps past lease expiry) keep the service
//! invariants, and the log always audits clean and replays to the live state.

mod common;

use std::sync::Arc;

use emobalance_core::corpus::EmotionLabel;
use emobalance_service::{
    audit_events, read_events, AnnotationService, ManualClock, ReviewRequest, Selection, ServiceConfig,
    SubmissionRequest, Verdict, DEFAULT_LEASE_MS,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Register(u8),
    Next(u8),
    /// Submit to whatever the worker currently leases; `valid` picks a well-formed answer.
    Submit {
        worker: u8,
        no_image: bool,
        valid: bool,
    },
    Review {
        nth: u8,
        approve: bool,
    },
    Advance(u64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        1 => (0u8..5).prop_map(Op::Register),
        3 => (0u8..5).prop_map(Op::Next),
        3 => (0u8..5, any::<bool>(), prop::bool::weighted(0.8)).prop_map(|(worker, no_image, valid)| Op::Submit { worker, no_image, valid }),
        1 => (0u8..20, any::<bool>()).prop_map(|(nth, approve)| Op::Review { nth, approve }),
        1 => prop_oneof![Just(60_000u64), Just(DEFAULT_LEASE_MS + 1)].prop_map(Op::Advance),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn random_sessions_stay_consistent(ops in prop::collection::vec(op(), 1..80)) {
        let dir = tempfile::tempdir().unwrap();
        let config = ServiceConfig { log_path: Some(dir.path().join("log.jsonl")), ..ServiceConfig::default() };
        let manifest = common::tasks(4, 2);
        let clock = ManualClock::new(0);
        let svc = AnnotationService::open(manifest.clone(), config.clone(), Arc::new(clock.clone())).unwrap();
        let mut held: Vec<Option<String>> = vec![None; 5];
        for op in ops {
            match op {
                Op::Register(w) => { let _ = svc.register_worker(&format!("w{w}")); }
                Op::Next(w) => {
                    if let Ok(next) = svc.next_task(&format!("w{w}")) {
                        held[w as usize] = next.task.map(|t| t.task_id);
                    }
                }
                Op::Submit { worker, no_image, valid } => {
                    let Some(task_id) = held[worker as usize].clone() else { continue };
                    let task = svc.state().task(&task_id).unwrap().task.clone();
                    let opposite = task.candidate_set.query_sentiment.opposite().unwrap();
                    let emotion = if valid { opposite.emotions()[0] } else { EmotionLabel::SomethingElse };
                    let req = SubmissionRequest {
                        task_id,
                        worker_id: format!("w{worker}"),
                        selection: if no_image { Selection::NoImage } else { Selection::Painting(task.candidate_set.slots[3].painting_id.clone()) },
                        emotion: (!no_image).then_some(emotion),
                        utterance: (!no_image).then(|| "a b c d e f".to_string()),
                    };
                    let _ = svc.submit(req);
                }
                Op::Review { nth, approve } => {
                    let subs = svc.submissions();
                    if let Some(s) = subs.get(nth as usize) {
                        let verdict = if approve { Verdict::Approved } else { Verdict::Rejected };
                        let _ = svc.review(&s.submission_id, ReviewRequest { verdict, reason: String::new() });
                    }
                }
                Op::Advance(ms) => clock.advance(ms),
            }
            let state = svc.state();
            prop_assert!(state.check_invariants().is_ok(), "{:?}", state.check_invariants());
        }
        let events = read_events(config.log_path.as_ref().unwrap()).unwrap();
        let (replayed, _) = audit_events(manifest, &events).map_err(TestCaseError::fail)?;
        prop_assert_eq!(replayed, svc.state());
        // Every exported annotation is of the sentiment opposite its query's.
        for record in svc.export_contrastive().annotations {
            let q = record.query_painting_id.unwrap();
            let query_sentiment = svc.state().tasks.iter().find(|t| t.task.candidate_set.query_id == q).unwrap().task.candidate_set.query_sentiment;
            prop_assert_eq!(Some(record.emotion.sentiment()), query_sentiment.opposite());
        }
    }
}
