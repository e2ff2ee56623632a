use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphabeta::config::OutputFormat;
use alphabeta::run::{rows_csv, run, ErrorReport, Overrides, RunReport, Subcommand};
use alphabeta::{parse_config, Error, Result};
use clap::{Parser, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "alphabeta", version, about = "Fundamental tensors and spacetime checks for (alpha,beta)-metrics")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration (not needed for `selftest`).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `sampling.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Cone samples per point.
    #[arg(long)]
    samples: Option<usize>,
    /// Report destination; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides `output` from the config.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Vector field components for `killing`, e.g. "1, 0, 0, 0".
    #[arg(long)]
    xi: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Tensor,
    Check,
    Classify,
    Killing,
    Selftest,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Tensor => Subcommand::Tensor,
            Command::Check => Subcommand::Check,
            Command::Classify => Subcommand::Classify,
            Command::Killing => Subcommand::Killing,
            Command::Selftest => Subcommand::Selftest,
        }
    }
}

fn write(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => writeln!(std::io::stdout().lock(), "{text}").map_err(|e| Error::Io(format!("stdout: {e}"))),
    }
}

fn emit(report: &RunReport, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let csv = match format {
        OutputFormat::Json => None,
        _ => Some(rows_csv(report).ok_or_else(|| Error::ConfigError {
            key: "output".into(),
            message: format!("csv output is only available for per-sample rows (check, killing), not `{}`", report.subcommand.name()),
        })??),
    };
    match (format, csv) {
        (OutputFormat::Csv, Some(c)) => write(out, c.trim_end()),
        (OutputFormat::Both, Some(c)) => {
            write(out, &report.to_json())?;
            let csv_path = out.map(|p| p.with_extension("csv"));
            write(csv_path.as_deref(), c.trim_end())
        }
        _ => write(out, &report.to_json()),
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let sub = Subcommand::from(cli.command);
    let config = cli.config.as_ref().map(parse_config).transpose()?;
    let format = match cli.format {
        Some(Format::Json) => OutputFormat::Json,
        Some(Format::Csv) => OutputFormat::Csv,
        Some(Format::Both) => OutputFormat::Both,
        None => config.as_ref().map_or(OutputFormat::Json, |c| c.output),
    };
    let overrides = Overrides { seed: cli.seed, samples: cli.samples, xi: cli.xi.clone(), keep_rows: format != OutputFormat::Json };
    let report = run(sub, config.as_ref(), &overrides)?;
    emit(&report, format, cli.out.as_deref())?;
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let text = ErrorReport::new(cli.command.into(), &e).to_json();
            if let Err(w) = write(cli.out.as_deref(), &text) {
                eprintln!("{w}");
            }
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
