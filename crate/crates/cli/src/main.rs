use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qhkit_core::experiments::{
    list_experiments, report_to_json, run_experiment, write_csv, write_report, ExperimentConfig, ReportFormat,
};
use qhkit_core::QhError;

/// Quasihyperbolic metric experiments.
#[derive(Parser)]
#[command(name = "qhkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run {
        config: PathBuf,
        /// Report destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json", value_parser = parse_format)]
        format: ReportFormat,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: QhError| e.to_string())
}

fn run(config: PathBuf, out: Option<PathBuf>, format: ReportFormat) -> Result<bool, QhError> {
    let cfg = ExperimentConfig::load(&config)?;
    let report = run_experiment(&cfg)?;
    match &out {
        Some(path) => write_report(&report, path, format)?,
        None => {
            let stdout = std::io::stdout();
            let io = |source| QhError::Io { path: "<stdout>".into(), source };
            match format {
                ReportFormat::Json => stdout.lock().write_all(report_to_json(&report)?.as_bytes()).map_err(io)?,
                ReportFormat::Csv => write_csv(&report, stdout.lock())?,
            }
        }
    }
    let s = &report.summary;
    eprintln!(
        "{}: {} rows, {} violations, {} soft failures, {:.2}s",
        cfg.name,
        report.rows.len(),
        s.violations,
        s.soft_failures,
        report.wall_time_secs
    );
    for note in &s.notes {
        eprintln!("note: {note}");
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, format } => run(config, out, format),
        Command::Validate { config } => ExperimentConfig::load(&config).map(|c| {
            println!("{}: ok", c.name);
            true
        }),
        Command::ListExperiments => {
            for (name, what) in list_experiments() {
                println!("{name:<22} {what}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
