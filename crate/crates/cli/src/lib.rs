//! Scenario runner for the `talbot` binary: config parsing, subcommands and
//! file output.

// Negated comparisons are deliberate: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::write_file;

#[derive(Debug, Parser)]
#[command(
    name = "talbot",
    version,
    about = "Talbot-Lau interferometer simulator"
)]
pub struct Cli {
    /// TOML run configuration; defaults apply to every omitted key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the full default configuration and exit.
    #[arg(long)]
    pub print_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Visibility against selector center velocity for the four models.
    Sweep,
    /// Simulated detector scans with fringe fits and drift.
    Scan,
    /// Fringe phase against table inclination.
    Gravity,
    /// Delta-distribution resonance width for a heavier species and finer gratings.
    Scale,
    /// Production model against the direct Fresnel oracle; exits 3 on disagreement.
    OracleCheck,
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            RunConfig::parse(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Sweep => commands::sweep(cfg),
        Command::Scan => commands::scan(cfg),
        Command::Gravity => commands::gravity(cfg),
        Command::Scale => commands::scale(cfg),
        Command::OracleCheck => commands::oracle(cfg),
    }
}

/// Runs the parsed command line; returns the lines to print.
pub fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    if cli.print_defaults {
        return Ok(vec![RunConfig::defaults_toml()]);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config(
            "no subcommand given (sweep, scan, gravity, scale, oracle-check)".into(),
        ));
    };
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.display().to_string();
    }
    cfg.output.svg |= cli.svg;
    cfg.validate()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // A pool already set up by an earlier run in the same process is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }

    let outcome = execute(command, &cfg)?;
    let dir = PathBuf::from(&cfg.output.dir);
    let mut lines = outcome.summary;
    for (name, table) in &outcome.tables {
        lines.push(format!(
            "wrote {}",
            write_file(&dir, name, &table.to_bytes())?.display()
        ));
    }
    for (name, bytes) in &outcome.raw {
        lines.push(format!(
            "wrote {}",
            write_file(&dir, name, bytes)?.display()
        ));
    }
    if cfg.output.svg {
        for (name, svg) in &outcome.plots {
            lines.push(format!(
                "wrote {}",
                write_file(&dir, name, svg.as_bytes())?.display()
            ));
        }
    }
    match outcome.failure {
        Some(e) => {
            for l in &lines {
                println!("{l}");
            }
            Err(e)
        }
        None => Ok(lines),
    }
}
