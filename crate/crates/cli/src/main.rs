//! `endwalk`: runs the experiments of the `endwalk` library from the command
//! line. Every command writes its outputs plus a `manifest.json` with the
//! resolved configuration and SHA-256 digests; `endwalk rerun` repeats a run
//! from its manifest and checks the digests.
//!
//! Exit codes: 0 on success, 1 when a check fails (unexpected verdicts,
//! embedding violations, digests that differ), 2 for usage and
//! configuration errors. Errors are also printed to stderr as one JSON line.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use endwalk::schreier::savchuk::EmbedDirection;
use endwalk::Action;
use thiserror::Error;

use commands::{CounterexampleArgs, EmbedArgs, GraphArgs, GraphFormat};
use config::RunConfig;
use manifest::RunManifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] endwalk::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "invalid-input",
            CliError::Io { .. } => "io",
            CliError::Check(_) => "check-failed",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "endwalk", version, about = "Random walks on Schreier graphs and their ends")]
struct Cli {
    /// Worker threads for simulation batches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the walks described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `walk.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificates and Green function checks for the counterexample chain.
    Counterexample {
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        /// Monte Carlo trials per Green function value; 0 skips all sampling.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Steps per walk on Z; 0 skips the walks.
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value_t = 200)]
        walks: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "endwalk-out")]
        out: PathBuf,
    },
    /// Export a ball of a Schreier graph.
    Graph {
        #[arg(long)]
        action: Action,
        /// Defaults to 3/4, (0,0) or (0,0,0).
        #[arg(long)]
        center: Option<String>,
        #[arg(long)]
        radius: u64,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
        /// Directory for the graph and manifest; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that one branch of the Thompson Schreier graph embeds in the other.
    EmbedCheck {
        #[arg(long)]
        radius: u64,
        #[arg(long)]
        direction: EmbedDirection,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the run recorded in a manifest and compare output digests.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_center(action: Action) -> &'static str {
    match action {
        Action::Thompson => "3/4",
        Action::Psi => "(0,0)",
        Action::PsiPrime => "(0,0,0)",
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out
                .or_else(|| cfg.output.dir.clone())
                .unwrap_or_else(|| PathBuf::from("endwalk-out"));
            commands::simulate(&cfg, seed, &dir)?;
        }
        Command::Counterexample {
            n,
            trials,
            horizon,
            walks,
            seed,
            out,
        } => {
            let args = CounterexampleArgs {
                n,
                trials,
                horizon,
                walks,
                seed,
            };
            commands::counterexample(&args, &out)?;
        }
        Command::Graph {
            action,
            center,
            radius,
            format,
            out,
        } => {
            let args = GraphArgs {
                action,
                center: center.unwrap_or_else(|| default_center(action).to_string()),
                radius,
                format,
            };
            match out {
                Some(dir) => {
                    commands::graph(&args, &dir)?;
                }
                None => print!("{}", commands::render_graph(&args)?),
            }
        }
        Command::EmbedCheck { radius, direction, out } => {
            commands::embed_check(&EmbedArgs { radius, direction }, out.as_deref())?;
        }
        Command::Rerun { manifest, out } => {
            commands::rerun(&RunManifest::load(&manifest)?, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", serde_json::json!({"error": "usage", "message": msg.trim_end()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(e.exit_code())
        }
    }
}
