use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use emobalance_core::corpus::write_corpus_jsonl;
use emobalance_core::selector::read_task_manifest;
use emobalance_service::{
    audit_events, read_events, serve as serve_http, AnnotationService, ContrastiveExport, RouterOptions, ServiceConfig,
    SystemClock, Verdict,
};
use serde::Serialize;
use tokio::net::TcpListener;

use super::Context;
use crate::client::ApiClient;
use crate::error::{CliError, CliResult};
use crate::manifest::write_json;
use crate::simulate::{review_all_pending, run_annotators, SimulationConfig};

fn runtime() -> CliResult<tokio::runtime::Runtime> {
    tokio::runtime::Runtime::new().map_err(|e| CliError::io("tokio runtime", e))
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    /// Task manifest from `select-candidates`.
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub host: Option<String>,
    /// Port to listen on; 0 picks a free one (the bound address is printed).
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub image_dir: Option<PathBuf>,
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long)]
    pub lease_minutes: Option<u64>,
    #[arg(long)]
    pub grace_minutes: Option<u64>,
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}

pub fn serve(ctx: &mut Context, args: ServeArgs) -> CliResult<()> {
    let svc = &mut ctx.config.service;
    if let Some(h) = &args.host {
        svc.host = h.clone();
    }
    svc.port = args.port.unwrap_or(svc.port);
    svc.image_dir = args.image_dir.clone().or(svc.image_dir.take());
    svc.ui_dir = args.ui_dir.clone().or(svc.ui_dir.take());
    svc.lease_minutes = args.lease_minutes.unwrap_or(svc.lease_minutes);
    svc.grace_minutes = args.grace_minutes.unwrap_or(svc.grace_minutes);
    ctx.config.validate()?;
    let mut m = ctx.manifest("serve", &args);
    m.input(&args.tasks);

    let params = ctx.config.service.clone();
    let tasks = read_task_manifest(&args.tasks)?;
    let log_path = ctx.out_path("events.jsonl");
    let snapshot_path = ctx.out_path("snapshot.json");
    let config = ServiceConfig {
        lease_ms: params.lease_minutes * 60_000,
        grace_ms: params.grace_minutes * 60_000,
        log_path: Some(log_path.clone()),
        snapshot_path: Some(snapshot_path.clone()),
    };
    let service = Arc::new(AnnotationService::open(tasks, config, Arc::new(SystemClock))?);
    let options = RouterOptions { image_dir: params.image_dir.clone(), ui_dir: params.ui_dir.clone() };
    let bind = format!("{}:{}", params.host, params.port);
    runtime()?.block_on(async {
        let listener = TcpListener::bind(&bind).await.map_err(|e| CliError::io(&bind, e))?;
        let addr = listener.local_addr().map_err(|e| CliError::io(&bind, e))?;
        // Scripts (and tests) read this line to find the port.
        println!("listening on http://{addr}");
        use std::io::Write;
        let _ = std::io::stdout().flush();
        serve_http(listener, service.clone(), options, shutdown_signal()).await.map_err(|e| CliError::io(&log_path, e))
    })?;
    let stats = service.stats();
    let stats_path = ctx.out_path("service_stats.json");
    write_json(&stats_path, &stats)?;
    m.output(&log_path).output(&snapshot_path).output(&stats_path);
    m.finish(&ctx.out)?;
    println!("stopped: {} submissions, {} of {} tasks complete", stats.submissions, stats.complete_tasks, stats.tasks);
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Base URL of a running service, e.g. http://127.0.0.1:8080.
    #[arg(long)]
    pub url: String,
    #[arg(long, default_value_t = 8)]
    pub workers: usize,
    #[arg(long, default_value_t = 0.03)]
    pub no_image_rate: f64,
    /// Stop each worker after this many tasks.
    #[arg(long)]
    pub max_per_worker: Option<usize>,
}

pub fn simulate(ctx: &mut Context, args: SimulateArgs) -> CliResult<()> {
    let m = ctx.manifest("simulate-annotators", &args);
    let cfg = SimulationConfig {
        workers: args.workers,
        no_image_rate: args.no_image_rate,
        seed: ctx.seed(),
        max_per_worker: args.max_per_worker,
    };
    let client = ApiClient::new(&args.url);
    let summary = runtime()?.block_on(run_annotators(&client, &cfg))?;
    let path = ctx.out_path("simulation.json");
    write_json(&path, &summary)?;
    let mut m = m;
    m.output(&path);
    m.finish(&ctx.out)?;
    println!("{} submissions ({} NO_IMAGE, {} refused)", summary.submissions, summary.no_image, summary.refused);
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictArg {
    Approved,
    Rejected,
}

impl From<VerdictArg> for Verdict {
    fn from(v: VerdictArg) -> Self {
        match v {
            VerdictArg::Approved => Verdict::Approved,
            VerdictArg::Rejected => Verdict::Rejected,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ReviewArgs {
    #[arg(long)]
    pub url: String,
    /// Review a single submission; without it, every pending submission is reviewed.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, value_enum)]
    pub verdict: VerdictArg,
    #[arg(long, default_value = "")]
    pub reason: String,
}

pub fn review(ctx: &mut Context, args: ReviewArgs) -> CliResult<()> {
    let mut m = ctx.manifest("review", &args);
    let client = ApiClient::new(&args.url);
    let reviewed = runtime()?.block_on(async {
        match &args.id {
            Some(id) => client.review(id, args.verdict.into(), &args.reason).await.map(|_| 1),
            None => review_all_pending(&client, args.verdict.into(), &args.reason).await,
        }
    })?;
    let path = ctx.out_path("review.json");
    write_json(&path, &serde_json::json!({ "reviewed": reviewed, "verdict": args.verdict }))?;
    m.output(&path);
    m.finish(&ctx.out)?;
    println!("reviewed {reviewed} submissions");
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    /// Export from a running service.
    #[arg(long, conflicts_with_all = ["tasks", "log"])]
    pub url: Option<String>,
    /// Export offline by replaying `--log` over this task manifest.
    #[arg(long, requires = "log")]
    pub tasks: Option<PathBuf>,
    #[arg(long, requires = "tasks")]
    pub log: Option<PathBuf>,
}

pub fn export(ctx: &mut Context, args: ExportArgs) -> CliResult<()> {
    let mut m = ctx.manifest("export", &args);
    let export = match (&args.url, &args.tasks, &args.log) {
        (Some(url), _, _) => runtime()?.block_on(ApiClient::new(url).export())?,
        (None, Some(tasks), Some(log)) => {
            m.input(tasks).input(log);
            let (state, _) =
                audit_events(read_task_manifest(tasks)?, &read_events(log)?).map_err(CliError::Invariant)?;
            ContrastiveExport::from_state(&state)
        }
        _ => return Err(CliError::Validation("give --url, or --tasks with --log".into())),
    };
    let no_image = export.no_image_count;
    let corpus = export.into_corpus("contrastive")?;
    let path = ctx.out_path("contrastive.jsonl");
    write_corpus_jsonl(&path, &corpus)?;
    let summary_path = ctx.out_path("export_summary.json");
    write_json(
        &summary_path,
        &serde_json::json!({
            "annotations": corpus.annotation_count(),
            "paintings": corpus.painting_count(),
            "no_image": no_image,
        }),
    )?;
    m.output(&path).output(&summary_path);
    m.finish(&ctx.out)?;
    println!("exported {} contrastive annotations ({} NO_IMAGE)", corpus.annotation_count(), no_image);
    Ok(())
}
