use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cpa_core::config::OutputFormat;
use cpa_core::run::{exit_code_for, render_report, EXIT_CONFIG, EXIT_NUMERICAL};
use cpa_core::{parse_config, run_subcommand, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Linear transmission and intracavity spectra.
    Spectrum,
    /// Polariton frequencies and CPA points.
    Polaritons,
    /// Switching efficiencies over Ω or g√N.
    Efficiency,
    /// Switching bandwidth and time per channel.
    Bandwidth,
    /// Nonlinear input-output branch.
    Nonlinear,
    /// Oracle cross-check and invariant suite.
    Validate,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Spectrum => Subcommand::Spectrum,
            Command::Polaritons => Subcommand::Polaritons,
            Command::Efficiency => Subcommand::Efficiency,
            Command::Bandwidth => Subcommand::Bandwidth,
            Command::Nonlinear => Subcommand::Nonlinear,
            Command::Validate => Subcommand::Validate,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Atom-cavity coherent perfect absorption switch simulator.
#[derive(Debug, Parser)]
#[command(name = "cpa-switch", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Configuration file (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output.path`. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let color = std::env::var_os("NO_COLOR").is_none() && std::io::stderr().is_terminal();

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }

    let out = run_subcommand(cli.command.into(), &cfg);
    eprint!("{}", render_report(&out.report, color));

    if !out.artifact.is_empty() {
        let dest = cli.out.or_else(|| cfg.output.path.clone().map(PathBuf::from));
        let written = match &dest {
            Some(p) => std::fs::write(p, &out.artifact),
            None => std::io::stdout().lock().write_all(out.artifact.as_bytes()),
        };
        if let Err(e) = written {
            eprintln!("cannot write output: {e}");
            return ExitCode::from(EXIT_NUMERICAL as u8);
        }
    }
    ExitCode::from(out.exit_code as u8)
}
