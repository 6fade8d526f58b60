//! Subcommands. Each reads its inputs from files, writes its artifacts into `--out`, and
//! finishes with a `<command>.manifest.json` describing the run.

mod analysis;
mod collect;
mod data;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use emobalance_core::corpus::{
    ingest_annotations, read_corpus_jsonl, read_features, ColumnMapping, Corpus, FeatureSet, Source,
};
use emobalance_core::index::SimilarityIndex;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_of, ManifestBuilder};

#[derive(Debug, Parser)]
#[command(name = "emobalance", version, about = "Find and counter emotional bias in affective captioning corpora")]
pub struct Cli {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `paths.out`; default: current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic biased corpus (annotations CSV + feature file).
    Synth(data::SynthArgs),
    /// Parse an annotation CSV into a corpus (JSONL).
    Ingest(data::IngestArgs),
    /// Union two corpora, or build the combined (contrastive + original) training corpus.
    Merge(data::MergeArgs),
    /// Keep a uniform random subset of annotations.
    Subsample(data::SubsampleArgs),
    /// Emotional scores, biased and single-sentiment sets, neighbourhood statistics.
    AnalyzeBias(analysis::AnalyzeArgs),
    /// Build and cache the similarity index for a feature file.
    BuildIndex(analysis::BuildIndexArgs),
    /// Generate contrastive annotation tasks for every biased painting.
    SelectCandidates(analysis::SelectArgs),
    /// Run the annotation service until interrupted.
    Serve(collect::ServeArgs),
    /// Drive scripted annotators against a running service.
    SimulateAnnotators(collect::SimulateArgs),
    /// Approve or reject submissions on a running service.
    Review(collect::ReviewArgs),
    /// Export approved contrastive annotations from a service or its event log.
    Export(collect::ExportArgs),
    /// Score generated captions, or evaluate the nearest-neighbour speaker.
    Evaluate(analysis::EvaluateArgs),
    /// Histograms and correlations of extended-emotion predictions.
    EmotionSpectrum(analysis::SpectrumArgs),
    /// Compare two bias reports (before/after) as JSON, CSV and Markdown.
    Report(analysis::ReportArgs),
    /// Run the synthetic bias-mitigation experiment end to end against a live service.
    Mitigate(analysis::MitigateArgs),
}

/// Shared state for one invocation: the effective configuration and the output directory.
pub struct Context {
    pub config: PipelineConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Starts a manifest whose config hash covers the effective configuration and the
    /// command's own parameters.
    pub fn manifest(&self, command: &str, params: &impl Serialize) -> ManifestBuilder {
        let hash = sha256_of(&(&self.config, params));
        let mut m = ManifestBuilder::new(command, hash, self.seed());
        m.parameters(params);
        m
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.or_else(|| config.paths.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let mut ctx = Context { config, out };
    match cli.command {
        Command::Synth(a) => data::synth(&mut ctx, a),
        Command::Ingest(a) => data::ingest(&mut ctx, a),
        Command::Merge(a) => data::merge(&mut ctx, a),
        Command::Subsample(a) => data::subsample(&mut ctx, a),
        Command::AnalyzeBias(a) => analysis::analyze_bias(&mut ctx, a),
        Command::BuildIndex(a) => analysis::build_index(&mut ctx, a),
        Command::SelectCandidates(a) => analysis::select_candidates(&mut ctx, a),
        Command::Evaluate(a) => analysis::evaluate(&mut ctx, a),
        Command::EmotionSpectrum(a) => analysis::emotion_spectrum(&mut ctx, a),
        Command::Report(a) => analysis::report(&mut ctx, a),
        Command::Mitigate(a) => analysis::mitigate(&mut ctx, a),
        Command::Serve(a) => collect::serve(&mut ctx, a),
        Command::SimulateAnnotators(a) => collect::simulate(&mut ctx, a),
        Command::Review(a) => collect::review(&mut ctx, a),
        Command::Export(a) => collect::export(&mut ctx, a),
    }
}

/// Where a corpus comes from: a CSV in the configured column layout, or corpus JSONL.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusInput {
    /// Corpus file: `.csv` annotations or `.jsonl` corpus (default: `paths.annotations`).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Feature file (default: `paths.features`).
    #[arg(long)]
    pub features: Option<PathBuf>,
}

impl CorpusInput {
    pub fn corpus_path(&self, ctx: &Context) -> CliResult<PathBuf> {
        self.corpus
            .clone()
            .or_else(|| ctx.config.paths.annotations.clone())
            .ok_or_else(|| CliError::Validation("no corpus given (use --corpus or paths.annotations)".into()))
    }

    pub fn features_path(&self, ctx: &Context) -> Option<PathBuf> {
        self.features.clone().or_else(|| ctx.config.paths.features.clone())
    }
}

pub fn load_corpus(path: &Path, columns: &ColumnMapping) -> CliResult<Corpus> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let outcome = ingest_annotations(path, Source::Original, columns)?;
        if outcome.skipped_count() > 0 {
            tracing::warn!(path = %path.display(), skipped = outcome.skipped_count(), "rows skipped while reading corpus");
        }
        Ok(outcome.corpus)
    } else {
        Ok(read_corpus_jsonl(path)?)
    }
}

pub fn load_features(path: &Path) -> CliResult<FeatureSet> {
    Ok(read_features(path)?)
}

/// Loads the cached index when it matches `features`, otherwise builds it.
pub fn load_index(features: &FeatureSet, cache: Option<&Path>) -> CliResult<SimilarityIndex> {
    if let Some(cache) = cache {
        match SimilarityIndex::load_cache(cache, features)? {
            Some(index) => return Ok(index),
            None => tracing::warn!(path = %cache.display(), "index cache is stale; rebuilding"),
        }
    }
    Ok(SimilarityIndex::build(features)?)
}
