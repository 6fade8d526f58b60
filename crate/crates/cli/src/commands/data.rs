use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use emobalance_core::corpus::{
    build_combined, ingest_annotations, merge as merge_corpora, subsample as subsample_corpus, write_annotations_csv,
    write_corpus_jsonl, write_features, Source,
};
use emobalance_core::synthetic::{SyntheticConfig, SyntheticCorpus};
use serde::Serialize;

use super::{load_corpus, load_features, Context};
use crate::error::{CliError, CliResult};
use crate::manifest::write_json;

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub paintings: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 25)]
    pub paintings_per_cluster: usize,
}

pub fn synth(ctx: &mut Context, args: SynthArgs) -> CliResult<()> {
    if args.paintings == 0 || args.dim == 0 || args.paintings_per_cluster == 0 {
        return Err(CliError::Validation("paintings, dim and paintings-per-cluster must be positive".into()));
    }
    let mut m = ctx.manifest("synth", &args);
    let cfg = SyntheticConfig {
        paintings: args.paintings,
        dim: args.dim,
        paintings_per_cluster: args.paintings_per_cluster,
        seed: ctx.seed(),
        ..SyntheticConfig::default()
    };
    let synth = SyntheticCorpus::generate(&cfg);
    let csv_path = ctx.out_path("annotations.csv");
    let file = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    write_annotations_csv(BufWriter::new(file), &synth.corpus)?;
    let features_path = ctx.out_path("features.afv");
    write_features(&features_path, synth.corpus.features().expect("synthetic corpora carry features"))?;
    m.output(&csv_path).output(&features_path);
    m.finish(&ctx.out)?;
    println!("wrote {} annotations on {} paintings", synth.corpus.annotation_count(), synth.corpus.painting_count());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Annotation CSV (default: `paths.annotations`).
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Optional feature file to cross-check painting coverage against.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Tag for the ingested annotations: original or contrastive.
    #[arg(long, default_value = "original")]
    pub source: String,
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    paintings: usize,
    annotations: usize,
    skipped: &'a [emobalance_core::corpus::SkippedRow],
    paintings_without_features: Vec<&'a str>,
}

pub fn ingest(ctx: &mut Context, args: IngestArgs) -> CliResult<()> {
    let path = args
        .annotations
        .clone()
        .or_else(|| ctx.config.paths.annotations.clone())
        .ok_or_else(|| CliError::Validation("no annotation file given (use --annotations)".into()))?;
    let source: Source = args.source.parse()?;
    let mut m = ctx.manifest("ingest", &args);
    m.input(&path);
    let outcome = ingest_annotations(&path, source, &ctx.config.columns)?;
    let features = match args.features.clone().or_else(|| ctx.config.paths.features.clone()) {
        Some(p) => {
            m.input(&p);
            Some(load_features(&p)?)
        }
        None => None,
    };
    let corpus_path = ctx.out_path("corpus.jsonl");
    write_corpus_jsonl(&corpus_path, &outcome.corpus)?;
    let summary_path = ctx.out_path("ingest_summary.json");
    let summary = IngestSummary {
        paintings: outcome.corpus.painting_count(),
        annotations: outcome.corpus.annotation_count(),
        skipped: &outcome.skipped,
        paintings_without_features: match &features {
            Some(f) => outcome.corpus.painting_ids().filter(|id| !f.contains(id)).collect(),
            None => Vec::new(),
        },
    };
    write_json(&summary_path, &summary)?;
    m.output(&corpus_path).output(&summary_path);
    m.finish(&ctx.out)?;
    println!(
        "ingested {} annotations on {} paintings ({} rows skipped)",
        summary.annotations,
        summary.paintings,
        outcome.skipped_count()
    );
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct MergeArgs {
    /// Base corpus (the original corpus with --combined).
    #[arg(long)]
    pub base: PathBuf,
    /// Corpus to add (the contrastive corpus with --combined).
    #[arg(long)]
    pub additions: PathBuf,
    /// Build the balanced combined corpus instead of a plain union.
    #[arg(long)]
    pub combined: bool,
    /// Feature file to carry along (restricted to the merged paintings).
    #[arg(long)]
    pub features: Option<PathBuf>,
}

pub fn merge(ctx: &mut Context, args: MergeArgs) -> CliResult<()> {
    let mut m = ctx.manifest("merge", &args);
    m.input(&args.base).input(&args.additions);
    let mut base = load_corpus(&args.base, &ctx.config.columns)?;
    if let Some(p) = &args.features {
        m.input(p);
        base.attach_features(load_features(p)?);
    }
    let additions = load_corpus(&args.additions, &ctx.config.columns)?;
    let (corpus, conflicts) = if args.combined {
        (build_combined(&base, &additions, ctx.seed())?, Vec::new())
    } else {
        let outcome = merge_corpora(&base, &additions)?;
        (outcome.corpus, outcome.style_conflicts)
    };
    let name = if args.combined { "combined.jsonl" } else { "merged.jsonl" };
    let path = ctx.out_path(name);
    write_corpus_jsonl(&path, &corpus)?;
    let summary_path = ctx.out_path("merge_summary.json");
    write_json(
        &summary_path,
        &serde_json::json!({
            "paintings": corpus.painting_count(),
            "annotations": corpus.annotation_count(),
            "style_conflicts": conflicts,
        }),
    )?;
    if let Some(features) = corpus.features() {
        let fpath = ctx.out_path(if args.combined { "combined.afv" } else { "merged.afv" });
        write_features(&fpath, features)?;
        m.output(fpath);
    }
    m.output(&path).output(&summary_path);
    m.finish(&ctx.out)?;
    println!("{}: {} annotations on {} paintings", path.display(), corpus.annotation_count(), corpus.painting_count());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct SubsampleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Number of annotations to keep.
    #[arg(long)]
    pub target: usize,
}

pub fn subsample(ctx: &mut Context, args: SubsampleArgs) -> CliResult<()> {
    let mut m = ctx.manifest("subsample", &args);
    m.input(&args.corpus);
    let corpus = load_corpus(&args.corpus, &ctx.config.columns)?;
    let sampled = subsample_corpus(&corpus, args.target, ctx.seed())?;
    let path = ctx.out_path("subsample.jsonl");
    write_corpus_jsonl(&path, &sampled)?;
    m.output(&path);
    m.finish(&ctx.out)?;
    println!("kept {} of {} annotations", sampled.annotation_count(), corpus.annotation_count());
    Ok(())
}
