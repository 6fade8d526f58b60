//! The bias-mitigation experiment end to end: generate a biased corpus, select contrastive
//! tasks, collect answers from scripted workers through a live annotation service, build
//! the combined corpus, and compare the two corpora.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use emobalance_core::bias::{identify_biased, neighborhood_emotion_entropy, sentiment_distribution};
use emobalance_core::corpus::{build_combined, Corpus};
use emobalance_core::index::SimilarityIndex;
use emobalance_core::metrics::{evaluate, nn_speaker, tokenize, EvalInstance, MetricReport, SpeakerOutput};
use emobalance_core::selector::{generate_tasks, SelectorConfig, DEFAULT_REQUIRED_SUBMISSIONS};
use emobalance_core::synthetic::{SyntheticConfig, SyntheticCorpus};
use emobalance_service::{serve, AnnotationService, RouterOptions, ServiceConfig, SystemClock, Verdict};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::client::ApiClient;
use crate::error::{CliError, CliResult};
use crate::simulate::{review_all_pending, run_annotators, SimulationConfig, SimulationSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MitigationConfig {
    pub synthetic: SyntheticConfig,
    pub selector: SelectorConfig,
    pub required_submissions: u32,
    pub simulation: SimulationConfig,
    /// Share of paintings held out from speaker training.
    pub holdout_fraction: f64,
    pub entropy_k: usize,
    pub seed: u64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            synthetic: SyntheticConfig::default(),
            selector: SelectorConfig::default(),
            required_submissions: DEFAULT_REQUIRED_SUBMISSIONS,
            simulation: SimulationConfig::default(),
            holdout_fraction: 0.1,
            entropy_k: 20,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub paintings: usize,
    pub annotations: usize,
    pub positive_pct: f64,
    pub negative_pct: f64,
    pub neutral_pct: f64,
    pub biased_paintings: usize,
    pub neighborhood_entropy: f64,
    /// Mean BLEU-1 of the nearest-neighbour speaker on the held-out paintings.
    pub nn_bleu1: f64,
    pub evaluated_paintings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationOutcome {
    pub original: CorpusSummary,
    pub combined: CorpusSummary,
    pub tasks: usize,
    pub contrastive_annotations: usize,
    pub no_image: usize,
    pub simulation: SimulationSummary,
    pub heldout_paintings: usize,
    /// `(before − after) / before` for the speaker's BLEU-1.
    pub bleu1_relative_drop: f64,
}

/// Deterministic held-out painting ids: the ones whose seeded hash falls below `fraction`.
pub fn holdout_ids(corpus: &Corpus, fraction: f64, seed: u64) -> BTreeSet<String> {
    use sha2::{Digest, Sha256};
    corpus
        .painting_ids()
        .filter(|id| {
            let d = Sha256::new().chain_update(seed.to_le_bytes()).chain_update(id).finalize();
            (u64::from_le_bytes(d[..8].try_into().expect("8 bytes")) as f64 / u64::MAX as f64) < fraction
        })
        .map(str::to_string)
        .collect()
}

/// Scores the nearest-neighbour speaker trained on `train` (minus `heldout`) against the
/// held-out paintings' captions in `references`. Paintings without references are skipped.
pub fn nn_evaluation(
    train: &Corpus,
    references: &Corpus,
    heldout: &BTreeSet<String>,
    index: &SimilarityIndex,
    seed: u64,
) -> CliResult<(MetricReport, Vec<SpeakerOutput>)> {
    let mut train = train.clone();
    train.retain_paintings(|p| !heldout.contains(&p.id));
    let mut instances = Vec::new();
    let mut outputs = Vec::new();
    for id in heldout {
        let Some(p) = references.painting(id).filter(|p| !p.annotations.is_empty()) else { continue };
        let out = nn_speaker(id, &train, index, seed)?;
        instances.push(EvalInstance {
            painting_id: id.clone(),
            generated: tokenize(&out.utterance),
            references: p.annotations.iter().map(|a| tokenize(&a.utterance)).collect(),
            grounding_emotion: None,
        });
        outputs.push(out);
    }
    if instances.is_empty() {
        return Err(CliError::Validation("no held-out painting has reference captions".into()));
    }
    Ok((evaluate(&instances)?, outputs))
}

fn summarize(
    corpus: &Corpus,
    index: &SimilarityIndex,
    heldout: &BTreeSet<String>,
    cfg: &MitigationConfig,
) -> CliResult<CorpusSummary> {
    let h = sentiment_distribution(corpus);
    let (report, _) = nn_evaluation(corpus, corpus, heldout, index, cfg.seed)?;
    Ok(CorpusSummary {
        paintings: corpus.painting_count(),
        annotations: corpus.annotation_count(),
        positive_pct: h.positive_pct,
        negative_pct: h.negative_pct,
        neutral_pct: h.neutral_pct,
        biased_paintings: identify_biased(corpus, cfg.selector.threshold)?.len(),
        neighborhood_entropy: neighborhood_emotion_entropy(corpus, index, cfg.entropy_k)?,
        nn_bleu1: report.overall.bleu1,
        evaluated_paintings: report.instances.len(),
    })
}

/// Runs the experiment. With `work_dir`, the service keeps its event log and snapshot there.
pub async fn run_mitigation(cfg: &MitigationConfig, work_dir: Option<&Path>) -> CliResult<MitigationOutcome> {
    let synth = SyntheticCorpus::generate(&cfg.synthetic);
    let original = synth.corpus;
    let features = original.features().ok_or_else(|| CliError::Invariant("synthetic corpus has no features".into()))?;
    let index = SimilarityIndex::build(features)?;

    let tasks = generate_tasks(&original, &index, &cfg.selector, cfg.required_submissions, cfg.seed)?;
    let task_count = tasks.len();

    let service_config = ServiceConfig {
        log_path: work_dir.map(|d| d.join("events.jsonl")),
        snapshot_path: work_dir.map(|d| d.join("snapshot.json")),
        ..ServiceConfig::default()
    };
    let service = Arc::new(AnnotationService::open(tasks, service_config, Arc::new(SystemClock))?);
    let listener = TcpListener::bind("127.0.0.1:0").await.map_err(|e| CliError::io("127.0.0.1:0", e))?;
    let addr = listener.local_addr().map_err(|e| CliError::io("listener", e))?;
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, service.clone(), RouterOptions::default(), async {
        let _ = stopped.await;
    }));

    let client = ApiClient::new(&format!("http://{addr}"));
    let collected = async {
        let simulation = run_annotators(&client, &cfg.simulation).await?;
        review_all_pending(&client, Verdict::Approved, "scripted review").await?;
        let export = client.export().await?;
        CliResult::Ok((simulation, export))
    }
    .await;
    let _ = stop.send(());
    server
        .await
        .map_err(|e| CliError::Invariant(format!("server task failed: {e}")))?
        .map_err(|e| CliError::io("annotation service", e))?;
    let (simulation, export) = collected?;

    let no_image = export.no_image_count;
    let contrastive = export.into_corpus("contrastive")?;
    let combined = build_combined(&original, &contrastive, cfg.seed)?;

    let heldout = holdout_ids(&original, cfg.holdout_fraction, cfg.seed);
    let before = summarize(&original, &index, &heldout, cfg)?;
    let after = summarize(&combined, &index, &heldout, cfg)?;
    let drop = if before.nn_bleu1 > 0.0 { (before.nn_bleu1 - after.nn_bleu1) / before.nn_bleu1 } else { 0.0 };
    Ok(MitigationOutcome {
        original: before,
        combined: after,
        tasks: task_count,
        contrastive_annotations: contrastive.annotation_count(),
        no_image,
        simulation,
        heldout_paintings: heldout.len(),
        bleu1_relative_drop: drop,
    })
}
