use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use iqa_cli::bench::{parse_modes, render_table, run_benchmark, to_json};
use iqa_cli::inputs::{build_engine, load_questions, EngineInputs, InputError};
use iqa_cli::service::{router, AppState, SessionLog};
use iqa_core::{InteractiveMode, PipelineConfig};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

#[derive(Parser)]
#[command(
    name = "iqa",
    version,
    about = "Interactive query construction over a knowledge graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Resources {
    /// Triples, one `subject<TAB>predicate<TAB>object` per line.
    #[arg(long)]
    kg: PathBuf,
    /// Lexicon JSON with entity and relation surface forms.
    #[arg(long)]
    lexicon: PathBuf,
    /// Replacement stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Exponent on usability in Option Gain.
    #[arg(long, default_value_t = 1)]
    omega: u32,
    #[arg(long, default_value_t = 10)]
    max_interactions: usize,
    #[arg(long, default_value_t = 200)]
    max_cqis: usize,
}

impl Resources {
    fn inputs(&self) -> EngineInputs {
        EngineInputs {
            kg: self.kg.clone(),
            lexicon: self.lexicon.clone(),
            stopwords: self.stopwords.clone(),
        }
    }

    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            omega: self.omega,
            max_interactions: self.max_interactions,
            max_cqis: self.max_cqis,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Serve the session API over HTTP.
    Serve {
        #[command(flatten)]
        resources: Resources,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Session log (JSON lines).
        #[arg(long, env = "IQA_LOG_PATH", default_value = "iqa-sessions.jsonl")]
        log: PathBuf,
        /// Directory of static UI assets served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Run the oracle evaluation and write a metrics report.
    Bench {
        #[command(flatten)]
        resources: Resources,
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated subset of og, ig, nib, sib.
        #[arg(long, default_value = "og,ig,nib,sib")]
        modes: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-question traces here.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Run the pipeline once and print the interpretation space.
    Ask {
        #[command(flatten)]
        resources: Resources,
        #[arg(long)]
        question: String,
        #[arg(long, value_enum, default_value = "og")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 5)]
        options: usize,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ModeArg {
    Og,
    Ig,
}

impl From<ModeArg> for InteractiveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Og => InteractiveMode::Og,
            ModeArg::Ig => InteractiveMode::Ig,
        }
    }
}

fn fail_input(e: &InputError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Ask {
            resources,
            question,
            mode,
            json,
            options,
        } => {
            let engine = match build_engine(&resources.inputs(), resources.config()) {
                Ok(e) => e,
                Err(e) => return fail_input(&e),
            };
            let dump = iqa_cli::ask::ask(&engine, &question, mode.into(), options);
            if json {
                print!("{}", to_json(&dump));
            } else {
                print!("{}", iqa_cli::ask::render(&dump));
            }
            ExitCode::SUCCESS
        }
        Command::Bench {
            resources,
            dataset,
            modes,
            out,
            traces,
        } => {
            let modes = match parse_modes(&modes) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let engine = match build_engine(&resources.inputs(), resources.config()) {
                Ok(e) => e,
                Err(e) => return fail_input(&e),
            };
            let questions = match load_questions(&dataset, engine.kg()) {
                Ok(q) => q,
                Err(e) => return fail_input(&e),
            };
            let output = run_benchmark(&engine, &questions, &modes);
            let written = std::fs::write(&out, to_json(&output.report))
                .with_context(|| format!("writing {}", out.display()))
                .and_then(|()| match &traces {
                    Some(path) => std::fs::write(path, to_json(&output.traces))
                        .with_context(|| format!("writing {}", path.display())),
                    None => Ok(()),
                });
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::FAILURE;
            }
            print!("{}", render_table(&output.report));
            ExitCode::SUCCESS
        }
        Command::Serve {
            resources,
            port,
            host,
            log,
            static_dir,
        } => {
            let engine = match build_engine(&resources.inputs(), resources.config()) {
                Ok(e) => e,
                Err(e) => return fail_input(&e),
            };
            match serve(engine, SocketAddr::new(host, port), &log, static_dir) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}

#[tokio::main]
async fn serve(
    engine: iqa_core::Engine,
    addr: SocketAddr,
    log: &std::path::Path,
    static_dir: Option<PathBuf>,
) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let log = SessionLog::open(log).with_context(|| format!("opening session log {}", log.display()))?;
    tracing::info!("session log: {}", log.path().display());
    let app = Arc::new(AppState::new(Arc::new(engine), Some(log)));
    let mut routes = router(app).layer(CorsLayer::permissive());
    if let Some(dir) = static_dir {
        routes = routes.fallback_service(ServeDir::new(dir));
    }
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, routes)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
