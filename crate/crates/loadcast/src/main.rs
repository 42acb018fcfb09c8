use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loadcast::pipeline::{cmd_evaluate, cmd_impute_eval, cmd_ingest, cmd_report, cmd_train};
use loadcast::{ModelKind, PipelineConfig, PipelineError, Result};

/// Probabilistic household load forecasting.
#[derive(Debug, Parser)]
#[command(name = "loadcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resample the meter CSV to an hourly cache and report structural gaps.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare linear and seasonal imputation on a masked training window.
    ImputeEval {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the enabled models on the training split.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset, e.g. `gbdt,lstm`.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
    /// Score the trained models on the test split and write the report.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the last report.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { config } => {
            let s = cmd_ingest(&PipelineConfig::load(&config)?)?;
            println!(
                "{} hours, {} structural gaps, fingerprint {}",
                s.hours, s.structural_gaps, s.fingerprint
            );
        }
        Command::ImputeEval { config } => {
            let r = cmd_impute_eval(&PipelineConfig::load(&config)?)?;
            for s in &r.scores {
                println!(
                    "{:<8} rmse {:.4}  mae {:.4}  emd {:.6}",
                    s.method.name(),
                    s.rmse,
                    s.mae,
                    s.emd
                );
            }
            println!("chosen: {}", r.chosen.name());
        }
        Command::Train { config, models } => {
            let config = PipelineConfig::load(&config)?;
            let only = models
                .map(|names| {
                    names
                        .iter()
                        .map(|n| {
                            ModelKind::from_name(n.trim())
                                .ok_or_else(|| PipelineError::Config(format!("unknown model `{n}`")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            let s = cmd_train(&config, only.as_deref())?;
            println!("trained: {}", s.trained.join(", "));
            for (name, err) in &s.failed {
                println!("failed: {name}: {err}");
            }
        }
        Command::Evaluate { config } => print!("{}", cmd_evaluate(&PipelineConfig::load(&config)?)?),
        Command::Report { config } => print!("{}", cmd_report(&PipelineConfig::load(&config)?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
