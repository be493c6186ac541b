//! `carnot-verif`: batch driver for the range oracle, Keller–Osserman tests,
//! witnesses, weak-form pasting and sweeps.

mod commands;
mod config;
mod error;
mod grid;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "carnot-verif", version, about = "Verification toolkit for quasilinear inequalities on Carnot groups")]
struct Cli {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Classify parameter points against the theorem ranges.
    Classify,
    /// Numerical Keller–Osserman test.
    Ko,
    /// Certify explicit radial witnesses.
    Witness,
    /// Paste the sharpness witness with a constant and verify the weak form.
    Paste,
    /// Large grid or random sweep with checkpointing.
    Sweep {
        /// Continue from `<out>.checkpoint`.
        #[arg(long)]
        resume: bool,
    },
    /// Sampled group axioms and norm identities.
    Selfcheck,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be > 0".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let default_format = match cli.cmd {
        Cmd::Sweep { .. } => Format::Csv,
        _ => Format::Json,
    };
    let ctx = Ctx {
        format: cli.format.or(cfg.format).unwrap_or(default_format),
        out: cli.out.clone().or_else(|| cfg.out.clone()),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        cfg,
    };
    log::debug!("format {:?}, out {:?}, seed {}", ctx.format, ctx.out, ctx.seed);
    match cli.cmd {
        Cmd::Classify => commands::classify(&ctx),
        Cmd::Ko => commands::ko(&ctx),
        Cmd::Witness => commands::witness(&ctx),
        Cmd::Paste => commands::paste(&ctx),
        Cmd::Sweep { resume } => commands::sweep(&ctx, resume),
        Cmd::Selfcheck => commands::selfcheck(&ctx),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CARNOT_VERIF_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
