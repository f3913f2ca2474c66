use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use idbadge::api::{router, AppState};
use idbadge::config::{Config, CONFIG_ENV};
use idbadge::face_rec::{FaceRecProvider, FixtureProvider, StubProvider};
use idbadge::ingest::ingest_seed;
use idbadge::report::{badge_report, source_report};
use idbadge::store::{load_ledger, read_events, EventLog};
use idbadge_core::{BadgeMap, EngineConfig, Ledger};

#[derive(Parser)]
#[command(name = "idbadge", version, about = "Photo identification provenance and quality badges")]
struct Cli {
    /// Config file; defaults apply when absent.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import a JSON-lines seed. Appends to the configured log when a config
    /// is given, otherwise only validates.
    Import {
        #[arg(long)]
        log: PathBuf,
    },
    /// Print a TSV report.
    Report {
        #[arg(long, value_enum)]
        by: ReportKind,
        /// Event file to report on; defaults to the configured log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Replay a log twice and compare the resulting badges.
    Verify {
        #[arg(long)]
        log: PathBuf,
    },
    /// Run the HTTP service.
    Serve,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Badge,
    SourceType,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let config = match cli.config.as_deref().map(Config::load).transpose() {
        Ok(c) => c,
        Err(e) => return fail(1, e),
    };
    match cli.command {
        Command::Import { log } => import(config, &log),
        Command::Report { by, log } => report(config, by, log.as_deref()),
        Command::Verify { log } => verify(config.unwrap_or_default().engine(), &log),
        Command::Serve => serve(config.unwrap_or_default()),
    }
}

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn import(config: Option<Config>, seed: &Path) -> ExitCode {
    let engine = config.as_ref().map(Config::engine).unwrap_or_default();
    let (mut store, mut ledger) = match &config {
        Some(c) => match EventLog::open(&c.storage.log_path, engine) {
            Ok((log, ledger)) => (Some(log), ledger),
            Err(e) => return fail(1, e),
        },
        None => (None, Ledger::new(engine)),
    };
    let (summary, appended) = match ingest_seed(&mut ledger, seed) {
        Ok(r) => r,
        Err(e) => return fail(1, format_args!("{}: {e}", seed.display())),
    };
    if let Some(store) = store.as_mut() {
        if let Err(e) = store.append(&appended) {
            return fail(1, e);
        }
    }
    println!(
        "events: {}, photos: {}, identifications: {}",
        summary.events_loaded, summary.photos, summary.identifications
    );
    ExitCode::SUCCESS
}

fn load(path: &Path, engine: EngineConfig) -> Result<Ledger, String> {
    let events = read_events(path).map_err(|e| e.to_string())?;
    load_ledger(events, engine).map_err(|e| format!("{}: {e}", path.display()))
}

fn report(config: Option<Config>, by: ReportKind, log: Option<&Path>) -> ExitCode {
    let config = config.unwrap_or_default();
    let path = log.unwrap_or(&config.storage.log_path);
    let ledger = if log.is_none() && !path.exists() {
        Ledger::new(config.engine())
    } else {
        match load(path, config.engine()) {
            Ok(l) => l,
            Err(e) => return fail(1, e),
        }
    };
    let table = match by {
        ReportKind::Badge => badge_report(&ledger),
        ReportKind::SourceType => source_report(&ledger),
    };
    print!("{table}");
    ExitCode::SUCCESS
}

fn first_difference(a: &BadgeMap, b: &BadgeMap) -> Option<String> {
    let keys = a.keys().chain(b.keys());
    keys.into_iter().find(|k| a.get(*k) != b.get(*k)).map(|k| k.to_string())
}

fn verify(engine: EngineConfig, path: &Path) -> ExitCode {
    let runs = [load(path, engine.clone()), load(path, engine)];
    let [first, second] = match runs {
        [Ok(a), Ok(b)] => [a, b],
        [Err(e), _] | [_, Err(e)] => return fail(1, e),
    };
    let (a, b) = (first.badges(), second.badges());
    let (ja, jb) = match (serde_json::to_vec(a), serde_json::to_vec(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return fail(1, e),
    };
    if ja != jb {
        let entity = first_difference(a, b).unwrap_or_else(|| "<serialization>".into());
        return fail(2, format_args!("replays diverge at photo {entity}"));
    }
    println!("ok: {} photos, {} events replayed", a.len(), first.events().len());
    ExitCode::SUCCESS
}

fn serve(config: Config) -> ExitCode {
    let face_rec: Box<dyn FaceRecProvider> = match &config.face_rec.fixture {
        Some(path) => match FixtureProvider::load(path) {
            Ok(p) => Box::new(p),
            Err(e) => return fail(1, e),
        },
        None => Box::new(StubProvider),
    };
    let (log, ledger) = match EventLog::open(&config.storage.log_path, config.engine()) {
        Ok(r) => r,
        Err(e) => return fail(1, e),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(1, e),
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(&config.listen).await {
            Ok(l) => l,
            Err(e) => return fail(1, format_args!("cannot listen on {}: {e}", config.listen)),
        };
        let addr = listener.local_addr().map_or_else(|_| config.listen.clone(), |a| a.to_string());
        println!("listening on http://{addr}");
        let app = router(AppState::new(ledger, Some(log), face_rec));
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(1, e),
        }
    })
}
