use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ontocompo::{router, AppState, Storage};
use ontocompo_core::model::{parse_application, Application};
use ontocompo_core::session::{replay_session, run_script, save_session};

#[derive(Parser)]
#[command(name = "ontocompo", version, about = "Compose new user interfaces out of existing applications")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory holding persisted workspaces.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Run a command script against a fresh workspace holding the given
    /// applications.
    Run {
        #[arg(long = "app", required = true)]
        apps: Vec<PathBuf>,
        #[arg(long)]
        script: PathBuf,
        /// Where the exported document goes; nothing is written if the
        /// script never exports.
        #[arg(long)]
        out: PathBuf,
        /// Also save the session log here.
        #[arg(long)]
        session: Option<PathBuf>,
    },
    /// Replay a saved session log and export the result.
    Replay {
        #[arg(long)]
        session: PathBuf,
        #[arg(long = "app", required = true)]
        apps: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_apps(paths: &[PathBuf]) -> Result<Vec<Application>> {
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_application(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(apps: &[PathBuf], script: &Path, out: &Path, session: Option<&Path>) -> Result<()> {
    let apps = read_apps(apps)?;
    let text = std::fs::read_to_string(script).with_context(|| format!("reading {}", script.display()))?;
    let result = run_script(apps, &text).map_err(|e| anyhow::anyhow!("{}: {e}", script.display()))?;
    if let Some(doc) = &result.export {
        write(out, doc)?;
    }
    if let Some(path) = session {
        write(path, &save_session(&result.session.workspace)?)?;
    }
    Ok(())
}

fn replay(log: &Path, apps: &[PathBuf], out: &Path) -> Result<()> {
    let apps = read_apps(apps)?;
    let text = std::fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let session = replay_session(&text, apps).map_err(|e| anyhow::anyhow!("{}: {e}", log.display()))?;
    write(out, &session.workspace.export()?)
}

async fn serve(host: std::net::IpAddr, port: u16, data: PathBuf) -> Result<()> {
    let state = AppState::persistent(Storage::new(&data))
        .await
        .with_context(|| format!("opening {}", data.display()))?;
    let addr = SocketAddr::new(host, port);
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Serve { port, data, host } => tokio::runtime::Runtime::new()
            .context("starting runtime")
            .and_then(|rt| rt.block_on(serve(host, port, data))),
        Cmd::Run { apps, script, out, session } => run(&apps, &script, &out, session.as_deref()),
        Cmd::Replay { session, apps, out } => replay(&session, &apps, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
