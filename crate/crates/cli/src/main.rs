use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stlf_cli::commands::{cmd_evaluate, cmd_fit, cmd_forecast, cmd_ingest, Overrides};
use stlf_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "stlf", version, about = "Short-term load forecasting benchmark and forecaster")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Restrict the command to one configured series.
    #[arg(long, global = true)]
    series: Option<String>,
    /// Forecast origin, ISO-8601 (forecast only; default: last observed hour).
    #[arg(long, global = true)]
    origin: Option<String>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding the configuration.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and repair every series; write a manifest and a cache of repaired series.
    Ingest,
    /// Run the rolling benchmark and write the MAPE report and summaries.
    Evaluate,
    /// Forecast the next 24 hours from an origin with every configured model.
    Forecast,
    /// Fit every configured model on all data and save it.
    Fit,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    let over = Overrides {
        series: cli.series,
        origin: cli.origin,
        seed: cli.seed,
        jobs: cli.jobs,
    };
    over.apply(&mut cfg)?;
    match cli.command {
        Command::Forecast => {
            for f in cmd_forecast(&cfg, over.series.as_deref(), over.origin.as_deref())? {
                println!("{}: {}", f.model, f.path.display());
            }
        }
        Command::Ingest => {
            let rows = cmd_ingest(&cfg)?;
            println!("ingested {} series into {}", rows.len(), cfg.output_dir.display());
        }
        Command::Evaluate => {
            let out = cmd_evaluate(&cfg)?;
            println!("{} reports: {}", out.reports, out.report_path.display());
            println!("summary: {}", out.summary_path.display());
        }
        Command::Fit => {
            for p in cmd_fit(&cfg)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the configuration-error code
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stlf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
