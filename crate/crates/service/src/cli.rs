//! `draftmarks` command line.
//!
//! Exit status is 0 on success, 2 for usage errors and 1 for anything that
//! goes wrong at run time.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use draftmarks_core::config::EngineConfig;
use draftmarks_core::controller::Role;
use draftmarks_core::fixtures;
use draftmarks_core::store::SessionStore;

#[derive(Debug, Parser)]
#[command(name = "draftmarks", version, about = "Turn writing-session logs into process schemas")]
pub struct Cli {
    /// Session store directory.
    #[arg(long, env = "DRAFTMARKS_STORE", global = true, default_value = "draftmarks-store")]
    pub store: PathBuf,
    /// Engine config file (TOML).
    #[arg(long, env = "DRAFTMARKS_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Store a session log and print its id. Use `-` to read stdin.
    Ingest { log: PathBuf },
    /// Write the schema envelope for a role.
    Schema {
        id: String,
        #[arg(long)]
        role: Role,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the static HTML export for a role.
    Export {
        id: String,
        #[arg(long)]
        role: Role,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        /// Address to listen on; falls back to the config file.
        #[arg(long, env = "DRAFTMARKS_LISTEN")]
        listen: Option<String>,
    },
    /// Write the bundled scenario logs.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => Ok(EngineConfig::load(p)?),
        None => Ok(EngineConfig::default()),
    }
}

fn open_store(cli: &Cli, config: EngineConfig) -> Result<SessionStore> {
    Ok(SessionStore::open(&cli.store, config)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest { log } => {
            let bytes = if log.as_os_str() == "-" {
                let mut buf = Vec::new();
                std::io::stdin().read_to_end(&mut buf)?;
                buf
            } else {
                std::fs::read(log).with_context(|| format!("reading {}", log.display()))?
            };
            let (id, _) = open_store(&cli, config)?.store_session(&bytes)?;
            writeln!(out, "{id}")?;
        }
        Command::Schema { id, role, output } => {
            let bytes = open_store(&cli, config)?.get_schema(id, *role)?;
            match output {
                Some(path) => write_file(path, &bytes)?,
                None => {
                    out.write_all(&bytes)?;
                    writeln!(out)?;
                }
            }
        }
        Command::Export { id, role, output } => {
            let html = open_store(&cli, config)?.get_export(id, *role)?;
            write_file(output, html.as_bytes())?;
        }
        Command::Serve { listen } => {
            let addr = listen.clone().unwrap_or_else(|| config.listen.clone());
            let store = Arc::new(open_store(&cli, config)?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .with_context(|| format!("binding {addr}"))?;
                tracing::info!(addr = %listener.local_addr()?, store = %cli.store.display(), "listening");
                axum::serve(listener, crate::api::router(store))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Fixtures { out: dir } => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, log) in fixtures::all() {
                let path = dir.join(format!("{name}.jsonl"));
                write_file(&path, log.to_jsonl().as_bytes())?;
                writeln!(out, "{}", path.display())?;
            }
        }
    }
    Ok(())
}
