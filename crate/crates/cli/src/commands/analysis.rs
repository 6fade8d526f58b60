use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use emobalance_core::bias::{analyze, BiasReport};
use emobalance_core::metrics::{read_eval_instances, MetricReport, MetricScores};
use emobalance_core::selector::{generate_tasks, write_task_manifest, Provenance};
use emobalance_core::spectrum::{
    emotion_histogram, offdiagonal_comparison, pearson_matrix, read_predictions, DEFAULT_HISTOGRAM_THRESHOLD,
};
use serde::{Deserialize, Serialize};

use super::{load_corpus, load_features, load_index, Context, CorpusInput};
use crate::error::{CliError, CliResult};
use crate::experiment::{holdout_ids, nn_evaluation, run_mitigation, MitigationConfig};
use crate::manifest::write_json;
use crate::simulate::SimulationConfig;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    /// Cached index for the feature file (see `build-index`).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Bias threshold on |emotional score| (overrides `bias.threshold`).
    #[arg(long)]
    pub threshold: Option<f64>,
}

pub fn analyze_bias(ctx: &mut Context, args: AnalyzeArgs) -> CliResult<()> {
    if let Some(t) = args.threshold {
        ctx.config.bias.threshold = t;
    }
    ctx.config.validate()?;
    let mut m = ctx.manifest("analyze-bias", &args);
    let corpus_path = args.input.corpus_path(ctx)?;
    m.input(&corpus_path);
    let corpus = load_corpus(&corpus_path, &ctx.config.columns)?;
    let index = match args.input.features_path(ctx) {
        Some(p) => {
            m.input(&p);
            let features = load_features(&p)?;
            Some(load_index(&features, args.index.as_deref())?)
        }
        None => None,
    };
    let report = analyze(&corpus, index.as_ref(), &ctx.config.bias)?;
    let report_path = ctx.out_path("bias_report.json");
    write_json(&report_path, &report)?;
    let scores_path = ctx.out_path("emotional_scores.csv");
    let mut w = create(&scores_path)?;
    report.write_scores_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(&scores_path, e))?;
    m.output(&report_path).output(&scores_path);
    m.finish(&ctx.out)?;
    let h = &report.sentiment_histogram;
    println!(
        "{} paintings, {} biased, {} single-sentiment; positive {:.1}% / negative {:.1}% / neutral {:.1}%",
        report.paintings,
        report.biased_ids.len(),
        report.single_sentiment_ids.len(),
        h.positive_pct,
        h.negative_pct,
        h.neutral_pct
    );
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct BuildIndexArgs {
    /// Feature file (default: `paths.features`).
    #[arg(long)]
    pub features: Option<PathBuf>,
}

pub fn build_index(ctx: &mut Context, args: BuildIndexArgs) -> CliResult<()> {
    let path = args
        .features
        .clone()
        .or_else(|| ctx.config.paths.features.clone())
        .ok_or_else(|| CliError::Validation("no feature file given (use --features)".into()))?;
    let mut m = ctx.manifest("build-index", &args);
    m.input(&path);
    let index = emobalance_core::index::SimilarityIndex::build(&load_features(&path)?)?;
    let cache = ctx.out_path("index.cache");
    index.save_cache(&cache)?;
    m.output(&cache);
    m.finish(&ctx.out)?;
    println!("indexed {} vectors of dimension {}", index.len(), index.dim());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub near: Option<usize>,
    #[arg(long)]
    pub high_score: Option<usize>,
    /// Accepted submissions needed to complete a task.
    #[arg(long)]
    pub required: Option<u32>,
}

#[derive(Serialize)]
struct SelectionSummary {
    tasks: usize,
    nearest_slots: usize,
    high_score_slots: usize,
    required_submissions: u32,
}

pub fn select_candidates(ctx: &mut Context, args: SelectArgs) -> CliResult<()> {
    let sel = &mut ctx.config.selector;
    sel.threshold = args.threshold.unwrap_or(sel.threshold);
    sel.neighbors = args.neighbors.unwrap_or(sel.neighbors);
    sel.near = args.near.unwrap_or(sel.near);
    sel.high_score = args.high_score.unwrap_or(sel.high_score);
    if let Some(r) = args.required {
        ctx.config.service.required_submissions = r;
    }
    ctx.config.validate()?;
    let mut m = ctx.manifest("select-candidates", &args);
    let corpus_path = args.input.corpus_path(ctx)?;
    let features_path = args
        .input
        .features_path(ctx)
        .ok_or_else(|| CliError::Validation("candidate selection needs --features".into()))?;
    m.input(&corpus_path).input(&features_path);
    let corpus = load_corpus(&corpus_path, &ctx.config.columns)?;
    let index = load_index(&load_features(&features_path)?, args.index.as_deref())?;
    let tasks =
        generate_tasks(&corpus, &index, &ctx.config.selector, ctx.config.service.required_submissions, ctx.seed())?;
    let tasks_path = ctx.out_path("tasks.jsonl");
    write_task_manifest(&tasks_path, &tasks)?;
    let count = |p| tasks.iter().map(|t| t.candidate_set.count(p)).sum();
    let summary = SelectionSummary {
        tasks: tasks.len(),
        nearest_slots: count(Provenance::Nearest),
        high_score_slots: count(Provenance::HighScore),
        required_submissions: ctx.config.service.required_submissions,
    };
    let summary_path = ctx.out_path("selection_summary.json");
    write_json(&summary_path, &summary)?;
    m.output(&tasks_path).output(&summary_path);
    m.finish(&ctx.out)?;
    println!("{} tasks written to {}", tasks.len(), tasks_path.display());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// JSONL of `{painting_id, emotion?, generated, references}` records.
    #[arg(long, conflicts_with = "train")]
    pub instances: Option<PathBuf>,
    /// Training corpus for the nearest-neighbour speaker.
    #[arg(long, requires = "features")]
    pub train: Option<PathBuf>,
    /// Corpus supplying the held-out paintings' reference captions (default: the training corpus).
    #[arg(long)]
    pub references: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Share of reference paintings held out from training.
    #[arg(long, default_value_t = 0.1)]
    pub holdout_fraction: f64,
}

pub fn evaluate(ctx: &mut Context, args: EvaluateArgs) -> CliResult<()> {
    let mut m = ctx.manifest("evaluate", &args);
    let report = match (&args.instances, &args.train) {
        (Some(path), None) => {
            m.input(path);
            emobalance_core::metrics::evaluate(&read_eval_instances(path)?)?
        }
        (None, Some(train_path)) => {
            if !(0.0..1.0).contains(&args.holdout_fraction) || args.holdout_fraction == 0.0 {
                return Err(CliError::Validation("holdout fraction must be in (0, 1)".into()));
            }
            let features_path = args.features.as_ref().expect("clap enforces --features");
            m.input(train_path).input(features_path);
            let train = load_corpus(train_path, &ctx.config.columns)?;
            let references = match &args.references {
                Some(p) => {
                    m.input(p);
                    load_corpus(p, &ctx.config.columns)?
                }
                None => train.clone(),
            };
            let index = load_index(&load_features(features_path)?, None)?;
            let heldout = holdout_ids(&references, args.holdout_fraction, ctx.seed());
            let (report, outputs) = nn_evaluation(&train, &references, &heldout, &index, ctx.seed())?;
            let gen_path = ctx.out_path("generations.jsonl");
            let mut w = create(&gen_path)?;
            for o in &outputs {
                serde_json::to_writer(&mut w, o).expect("serialisable");
                writeln!(w).map_err(|e| CliError::io(&gen_path, e))?;
            }
            w.flush().map_err(|e| CliError::io(&gen_path, e))?;
            m.output(gen_path);
            report
        }
        _ => return Err(CliError::Validation("give either --instances or --train (with --features)".into())),
    };
    let json_path = ctx.out_path("metrics.json");
    write_json(&json_path, &report)?;
    let csv_path = ctx.out_path("metrics.csv");
    let mut w = create(&csv_path)?;
    report.write_table_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    m.output(&json_path).output(&csv_path);
    m.finish(&ctx.out)?;
    let o = &report.overall;
    println!(
        "{} captions: BLEU-1 {:.4} BLEU-4 {:.4} ROUGE-L {:.4} CIDEr-D {:.4}",
        report.instances.len(),
        o.bleu1,
        o.bleu4,
        o.rouge_l,
        o.cider_d
    );
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Prediction file: taxonomy header line, then `{key, probs}` JSONL rows.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Second prediction file to compare correlation structure against.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_THRESHOLD)]
    pub threshold: f64,
}

pub fn emotion_spectrum(ctx: &mut Context, args: SpectrumArgs) -> CliResult<()> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::Validation(format!("threshold {} outside [0, 1]", args.threshold)));
    }
    let mut m = ctx.manifest("emotion-spectrum", &args);
    m.input(&args.predictions);
    let set = read_predictions(&args.predictions)?;
    let histogram = emotion_histogram(&set, args.threshold);
    let matrix = pearson_matrix(&set)?;

    let hist_path = ctx.out_path("histogram.csv");
    let mut text = String::from("label,count\n");
    for c in &histogram {
        text.push_str(&format!("{},{}\n", csv_field(&c.label), c.count));
    }
    write_text(&hist_path, &text)?;
    let corr_path = ctx.out_path("correlation.csv");
    let mut w = create(&corr_path)?;
    matrix.write_csv(&mut w)?;
    w.flush().map_err(|e| CliError::io(&corr_path, e))?;
    m.output(&hist_path).output(&corr_path);

    let comparison = match &args.compare {
        Some(path) => {
            m.input(path);
            let other = pearson_matrix(&read_predictions(path)?)?;
            let cmp_path = ctx.out_path("correlation_compare.csv");
            let mut w = create(&cmp_path)?;
            other.write_csv(&mut w)?;
            w.flush().map_err(|e| CliError::io(&cmp_path, e))?;
            m.output(cmp_path);
            Some(offdiagonal_comparison(&matrix, &other)?)
        }
        None => None,
    };
    let json_path = ctx.out_path("spectrum.json");
    write_json(
        &json_path,
        &serde_json::json!({
            "predictions": set.len(),
            "threshold": args.threshold,
            "histogram": histogram,
            "correlation": matrix,
            "comparison": comparison,
        }),
    )?;
    m.output(&json_path);
    m.finish(&ctx.out)?;
    println!("{} predictions over {} labels", set.len(), set.taxonomy().len());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Bias report of the corpus before intervention.
    #[arg(long)]
    pub before: PathBuf,
    /// Bias report after intervention.
    #[arg(long)]
    pub after: PathBuf,
    #[arg(long, requires = "after_metrics")]
    pub before_metrics: Option<PathBuf>,
    #[arg(long, requires = "before_metrics")]
    pub after_metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub quantity: String,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

/// Absolute gap between positive and negative percentages; lower is more balanced.
pub fn sentiment_gap(report: &BiasReport) -> f64 {
    (report.sentiment_histogram.positive_pct - report.sentiment_histogram.negative_pct).abs()
}

fn bias_rows(a: &BiasReport, b: &BiasReport) -> Vec<(String, f64, f64)> {
    let mut rows = vec![
        ("paintings".to_string(), a.paintings as f64, b.paintings as f64),
        ("annotations".into(), a.annotations as f64, b.annotations as f64),
        ("positive_pct".into(), a.sentiment_histogram.positive_pct, b.sentiment_histogram.positive_pct),
        ("negative_pct".into(), a.sentiment_histogram.negative_pct, b.sentiment_histogram.negative_pct),
        ("neutral_pct".into(), a.sentiment_histogram.neutral_pct, b.sentiment_histogram.neutral_pct),
        ("sentiment_gap".into(), sentiment_gap(a), sentiment_gap(b)),
        ("biased_paintings".into(), a.biased_ids.len() as f64, b.biased_ids.len() as f64),
        ("single_sentiment_paintings".into(), a.single_sentiment_ids.len() as f64, b.single_sentiment_ids.len() as f64),
    ];
    for (k, va) in &a.neighborhood_entropy {
        if let Some(vb) = b.neighborhood_entropy.get(k) {
            rows.push((format!("entropy_k{k}"), *va, *vb));
        }
    }
    if let (Some(ra), Some(rb)) = (&a.neighborhood_ratio, &b.neighborhood_ratio) {
        rows.push(("same_sentiment_ratio_mean".into(), ra.per_k_mean, rb.per_k_mean));
    }
    rows
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn report(ctx: &mut Context, args: ReportArgs) -> CliResult<()> {
    let mut m = ctx.manifest("report", &args);
    m.input(&args.before).input(&args.after);
    let before: BiasReport = read_json(&args.before)?;
    let after: BiasReport = read_json(&args.after)?;
    let mut rows = bias_rows(&before, &after);
    if let (Some(pb), Some(pa)) = (&args.before_metrics, &args.after_metrics) {
        m.input(pb).input(pa);
        let (mb, ma): (MetricReport, MetricReport) = (read_json(pb)?, read_json(pa)?);
        for ((name, vb), va) in MetricScores::NAMES.iter().zip(mb.overall.values()).zip(ma.overall.values()) {
            rows.push((name.to_string(), vb, va));
        }
    }
    let rows: Vec<ReportRow> = rows
        .into_iter()
        .map(|(quantity, before, after)| ReportRow { quantity, before, after, delta: after - before })
        .collect();

    let json_path = ctx.out_path("report.json");
    write_json(
        &json_path,
        &serde_json::json!({
            "before": before.corpus,
            "after": after.corpus,
            "balance_improved": sentiment_gap(&after) < sentiment_gap(&before),
            "rows": rows,
        }),
    )?;
    let mut csv = String::from("quantity,before,after,delta\n");
    let mut md = format!(
        "# {} → {}\n\n| quantity | before | after | delta |\n|---|---:|---:|---:|\n",
        before.corpus, after.corpus
    );
    for r in &rows {
        csv.push_str(&format!("{},{:.6},{:.6},{:.6}\n", csv_field(&r.quantity), r.before, r.after, r.delta));
        md.push_str(&format!("| {} | {:.4} | {:.4} | {:+.4} |\n", r.quantity, r.before, r.after, r.delta));
    }
    let csv_path = ctx.out_path("report.csv");
    let md_path = ctx.out_path("report.md");
    write_text(&csv_path, &csv)?;
    write_text(&md_path, &md)?;
    m.output(&json_path).output(&csv_path).output(&md_path);
    m.finish(&ctx.out)?;
    print!("{md}");
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct MitigateArgs {
    #[arg(long, default_value_t = 1000)]
    pub paintings: usize,
    #[arg(long, default_value_t = 8)]
    pub workers: usize,
    #[arg(long, default_value_t = 0.03)]
    pub no_image_rate: f64,
    #[arg(long)]
    pub required: Option<u32>,
}

pub fn mitigate(ctx: &mut Context, args: MitigateArgs) -> CliResult<()> {
    if let Some(r) = args.required {
        ctx.config.service.required_submissions = r;
    }
    ctx.config.validate()?;
    let mut m = ctx.manifest("mitigate", &args);
    let mut cfg = MitigationConfig {
        selector: ctx.config.selector.clone(),
        required_submissions: ctx.config.service.required_submissions,
        simulation: SimulationConfig {
            workers: args.workers,
            no_image_rate: args.no_image_rate,
            seed: ctx.seed(),
            max_per_worker: None,
        },
        seed: ctx.seed(),
        ..MitigationConfig::default()
    };
    cfg.synthetic.paintings = args.paintings;
    cfg.synthetic.seed = ctx.seed();
    // A fresh run: a log left by an earlier run would be replayed as already-collected work.
    for stale in ["events.jsonl", "snapshot.json"] {
        let p = ctx.out_path(stale);
        if p.exists() {
            std::fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
        }
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("tokio runtime", e))?;
    let outcome = runtime.block_on(run_mitigation(&cfg, Some(&ctx.out)))?;
    let path = ctx.out_path("mitigation.json");
    write_json(&path, &outcome)?;
    m.output(&path).output(ctx.out_path("events.jsonl"));
    m.finish(&ctx.out)?;
    let rows: BTreeMap<&str, (f64, f64)> = BTreeMap::from([
        ("positive %", (outcome.original.positive_pct, outcome.combined.positive_pct)),
        ("negative %", (outcome.original.negative_pct, outcome.combined.negative_pct)),
        ("entropy", (outcome.original.neighborhood_entropy, outcome.combined.neighborhood_entropy)),
        ("NN BLEU-1", (outcome.original.nn_bleu1, outcome.combined.nn_bleu1)),
    ]);
    println!(
        "{} tasks, {} contrastive annotations, {} NO_IMAGE",
        outcome.tasks, outcome.contrastive_annotations, outcome.no_image
    );
    for (k, (a, b)) in rows {
        println!("{k:>12}: {a:.4} -> {b:.4}");
    }
    Ok(())
}
