mod media_arg;
mod report;

use std::io::Write;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use provcheck_core::engine::{summarize_media, AnalysisError, AnalysisInput, Engine, EngineConfig, Stage};
use provcheck_core::ingest::{sniff_format, Article, FetchLimits, MediaItem, MediaKind};
use provcheck_core::llm::{build_backend, BackendKind, CompletionBackend, MockScript, ModelConfig};
use provcheck_core::provenance::SummaryStatus;
use provcheck_service::{analysis_document, BoundService, ServiceConfig, DEFAULT_MAX_BODY_BYTES, DEFAULT_PORT};

use crate::media_arg::{absolute, parse_media_arg, MediaArg};

const EXIT_USAGE: u8 = 2;
const EXIT_INGEST: u8 = 3;
const EXIT_BACKEND: u8 = 4;

#[derive(Parser)]
#[command(name = "provcheck", version, about = "Check whether news media are used in context, using their provenance metadata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze an article given by URL or as structured fields.
    Analyze(AnalyzeArgs),
    /// Dump the provenance record of a local media file.
    ProvenanceInspect(InspectArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    Remote,
}

#[derive(Args)]
struct BackendOpts {
    /// Model backend.
    #[arg(long, value_enum, default_value = "remote", env = "PROVCHECK_BACKEND")]
    backend: BackendArg,
    /// Scripted responses for the mock backend.
    #[arg(long, value_name = "PATH")]
    mock_script: Option<PathBuf>,
    /// Chat-completions endpoint for the remote backend.
    #[arg(long, env = "PROVCHECK_ENDPOINT")]
    endpoint: Option<String>,
    #[arg(long, env = "PROVCHECK_MODEL")]
    model: Option<String>,
    /// Environment variable holding the bearer token.
    #[arg(long, default_value = "PROVCHECK_API_KEY")]
    api_key_env: String,
    /// Repair re-asks after an unparseable verdict (0-2).
    #[arg(long, default_value_t = 1)]
    repair_retries: u8,
    /// Assess each media item separately and combine the verdicts.
    #[arg(long)]
    per_media: bool,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["url", "title"]))]
struct AnalyzeArgs {
    #[arg(long, conflicts_with_all = ["title", "body", "media"])]
    url: Option<String>,
    #[arg(long, requires = "body")]
    title: Option<String>,
    #[arg(long, requires = "title")]
    body: Option<String>,
    /// PATH[:CAPTION]; repeatable.
    #[arg(long, value_name = "PATH[:CAPTION]", value_parser = parse_media_arg, requires = "title")]
    media: Vec<MediaArg>,
    /// Print the result document instead of the report.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    backend: BackendOpts,
}

#[derive(Args)]
struct InspectArgs {
    file: PathBuf,
    /// Print the prompt-ready summary instead of the record.
    #[arg(long)]
    summary: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, env = "PROVCHECK_JOURNAL")]
    journal: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_BODY_BYTES)]
    max_body_bytes: usize,
    /// Allowed CORS origin; repeatable. Defaults to any localhost origin.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
    #[command(flatten)]
    backend: BackendOpts,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("provcheck: {message}");
    ExitCode::from(code)
}

fn engine_config(opts: &BackendOpts) -> EngineConfig {
    let defaults = ModelConfig::default();
    EngineConfig {
        model: ModelConfig {
            backend: match opts.backend {
                BackendArg::Mock => BackendKind::Mock,
                BackendArg::Remote => BackendKind::Remote,
            },
            endpoint: opts.endpoint.clone(),
            model_name: opts.model.clone().unwrap_or(defaults.model_name),
            max_repair_retries: opts.repair_retries,
            api_key_env: Some(opts.api_key_env.clone()),
            ..defaults
        },
        fetch: FetchLimits::default(),
        per_media: opts.per_media,
    }
}

fn backend(opts: &BackendOpts, config: &EngineConfig) -> Result<Arc<dyn CompletionBackend>, String> {
    let script = opts
        .mock_script
        .as_deref()
        .map(MockScript::load)
        .transpose()
        .map_err(|e| e.to_string())?;
    build_backend(&config.model, script).map_err(|e| e.to_string())
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let config = engine_config(&args.backend);
    let backend = match backend(&args.backend, &config) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let input = match (args.url, args.title, args.body) {
        (Some(url), _, _) => AnalysisInput::Url(url),
        (None, Some(title), Some(body)) => {
            let mut article = Article::new(title, body);
            for m in args.media {
                let path = absolute(&m.path);
                let locator = path.to_string_lossy().into_owned();
                let kind = MediaKind::from_locator(&locator).unwrap_or(MediaKind::Image);
                let mut item = MediaItem::new(locator, kind);
                if let Some(c) = m.caption {
                    item = item.with_caption(c);
                }
                article.media.push(item);
            }
            AnalysisInput::Article(article)
        }
        _ => return fail(EXIT_USAGE, "either --url or both --title and --body are required"),
    };
    let engine = Engine::new(config, backend);
    match engine.run_pipeline(input) {
        Ok(result) => {
            let text = if args.json {
                analysis_document(&result) + "\n"
            } else {
                report::render_report(&result)
            };
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(exit_code_for(&e), e),
    }
}

fn exit_code_for(e: &AnalysisError) -> u8 {
    match e.stage() {
        Stage::Ingest => EXIT_INGEST,
        Stage::Backend | Stage::Parse => EXIT_BACKEND,
    }
}

fn inspect(args: InspectArgs) -> ExitCode {
    let bytes = match std::fs::read(&args.file) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_INGEST, format!("cannot read {}: {e}", args.file.display())),
    };
    let path = absolute(&args.file);
    let locator = path.to_string_lossy().into_owned();
    let kind = sniff_format(&bytes)
        .map(|f| f.kind())
        .or_else(|| MediaKind::from_locator(&locator))
        .unwrap_or(MediaKind::Image);
    let mut item = MediaItem::new(locator, kind);
    item.content = Some(bytes);
    let (summary, warnings) = summarize_media(&mut item, &FetchLimits::default());
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let file = display(&args.file);
    match summary.status {
        SummaryStatus::Ok if args.summary => println!("{}", summary.text),
        SummaryStatus::Ok => {
            let record = summary.record.as_ref().expect("ok summaries carry their record");
            println!("{}", provcheck_core::engine::canonical_json(record));
        }
        SummaryStatus::NoMetadata => println!("no provenance metadata in {file}"),
        SummaryStatus::ParseError => println!("{file}: {}", summary.text),
        SummaryStatus::UnsupportedKind => println!("{file}: {}", summary.text),
    }
    ExitCode::SUCCESS
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn serve(args: ServeArgs) -> ExitCode {
    let engine = engine_config(&args.backend);
    let backend = match backend(&args.backend, &engine) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let config = ServiceConfig {
        bind_address: args.bind,
        port: args.port,
        journal_path: args.journal,
        engine,
        max_body_bytes: args.max_body_bytes,
        cors_origins: (!args.cors_origins.is_empty()).then_some(args.cors_origins),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INGEST, e),
    };
    runtime.block_on(async move {
        let service = match BoundService::bind(&config, backend).await {
            Ok(s) => s,
            Err(e) => return fail(EXIT_INGEST, e),
        };
        println!("listening on http://{}", service.local_addr());
        let _ = std::io::stdout().flush();
        match service.serve(shutdown_signal()).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(EXIT_INGEST, e),
        }
    })
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
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let default_level = if matches!(cli.command, Command::Serve(_)) {
        "info"
    } else {
        "warn"
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::ProvenanceInspect(args) => inspect(args),
        Command::Serve(args) => serve(args),
    }
}
