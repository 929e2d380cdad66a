use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use gravecho::config::{Format, OutputConfig, RunConfig};
use gravecho::runner::run;
use gravecho::scenarios::{list_scenarios, Registry};
use gravecho::sweep::{sweep, SweepConfig};
use gravecho::Error;

#[derive(Parser)]
#[command(
    name = "gravecho",
    version,
    about = "Echo simulator for redshift-detuned nuclear targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (preset or config file).
    Run {
        /// TOML run config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in scenario; replaces the one named in the config.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory [default: out/<scenario>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output table format; repeatable.
        #[arg(long, value_parser = parse_format)]
        format: Vec<Format>,
    },
    /// List built-in scenarios.
    List,
    /// Run a parameter grid.
    Sweep {
        /// TOML sweep file with [template] and [grid] tables.
        #[arg(long)]
        config: PathBuf,
        /// Directory for point_NNN/ runs and summary.csv.
        #[arg(long)]
        out: PathBuf,
        /// Output table format; repeatable.
        #[arg(long, value_parser = parse_format)]
        format: Vec<Format>,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn cmd_run(
    config: Option<PathBuf>,
    scenario: Option<String>,
    out: Option<PathBuf>,
    format: Vec<Format>,
) -> Result<ExitCode, Error> {
    let registry = Registry::builtin();
    let mut cfg = match &config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = scenario {
        cfg.scenario = Some(name);
        cfg.inline = None;
    }
    let resolved = cfg.resolve(&registry)?;
    let mut output = cfg.output.clone();
    if !format.is_empty() {
        output.formats = format;
    }
    let dir = out
        .or_else(|| output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&resolved.scenario.name));
    output.dir = None;

    let report = run(&resolved, &output, &dir)?;
    for w in &report.manifest.warnings {
        eprintln!("warning: {w}");
    }
    for m in &report.outcome.metrics {
        println!(
            "echo {}: window [{}, {}] s, tau = {:.3} s, R = {:.4}, F = {:.4}",
            m.m, m.a, m.b, m.tau, m.efficiency, m.fidelity
        );
    }
    println!("wrote {}", dir.display());
    match &report.metrics_error {
        Some(e) => Ok(fail(e)),
        None => Ok(ExitCode::SUCCESS),
    }
}

fn cmd_sweep(
    config: PathBuf,
    out: PathBuf,
    format: Vec<Format>,
    workers: usize,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| Error::config("--config", format!("{}: {e}", config.display())))?;
    let cfg = SweepConfig::from_toml_str(&text)?;
    let output = OutputConfig {
        dir: None,
        formats: format,
    };
    let points = sweep(&cfg, &Registry::builtin(), &out, &output, workers)?;
    let failed = points.iter().filter(|p| p.exit_code != 0).count();
    println!(
        "{} points, {} failed; summary in {}",
        points.len(),
        failed,
        out.join("summary.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            scenario,
            out,
            format,
        } => cmd_run(config, scenario, out, format),
        Command::List => {
            for (name, description) in list_scenarios(&Registry::builtin()) {
                println!("{name:<24} {description}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            out,
            format,
            workers,
        } => cmd_sweep(config, out, format, workers),
    };
    result.unwrap_or_else(|e| fail(&e))
}
