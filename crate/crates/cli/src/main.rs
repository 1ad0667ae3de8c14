//! `tracespace` command-line driver.
//!
//! Exit status: 0 when every check passes, 2 when a certification check
//! fails, 1 on usage, configuration or input errors.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "tracespace", version, about = "Certification experiments for weighted trace and interpolation spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for random instances (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evaluate a sequence norm on an input file or on random instances.
    Norm,
    /// Dump a K-curve as two columns `t, K`.
    Kcurve,
    /// Certify an interpolation identity over random instances.
    InterpCheck,
    /// Extension boundedness and trace-of-extension checks.
    TraceExtCheck,
    /// Validate the atoms produced by the extension operator.
    AtomsCheck,
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = config::read(cli.config.as_deref())?;
    let seed = cli.seed.map_or_else(|| cfg.get("seed", 0u64), |s| cfg.get("seed", 0u64).map(|_| s))?;
    let report = match cli.command {
        Command::Norm => commands::norm(&cfg, seed),
        Command::Kcurve => commands::kcurve(&cfg, seed),
        Command::InterpCheck => commands::interp_check(&cfg, seed),
        Command::TraceExtCheck => commands::trace_ext_check(&cfg, seed),
        Command::AtomsCheck => commands::atoms_check(&cfg, seed),
    }?;
    cfg.finish()?;
    let text = report.render(cli.format);
    match &cli.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
