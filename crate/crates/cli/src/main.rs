use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use detc_cli::{csv_string, execute, parse_config, selftest, write_results};
use detc_core::{asymptotic_lower_bound, make_instance, regret_upper_bound_known};

#[derive(Parser)]
#[command(
    name = "detc",
    version,
    about = "Monte Carlo experiments for double explore-then-commit bandit policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Write the result table here instead of to stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the table, config and run manifest as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Worker threads; 0 uses one per core.
        #[arg(long, env = "DETC_WORKERS", default_value_t = 0)]
        workers: usize,
    },
    /// Print regret bounds for a two-armed instance with gap delta.
    Bounds {
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long)]
        delta: f64,
        /// Bounds for the known-gap setting.
        #[arg(long)]
        known: bool,
    },
    /// Run quick built-in consistency checks.
    Selftest,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            csv,
            json,
            workers,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("cannot read {}", config.display()))?;
            let parsed = parse_config(&text).with_context(|| format!("in {}", config.display()))?;
            for d in &parsed.defaults {
                eprintln!("default: {d}");
            }
            let record = execute(&parsed, workers)?;
            if csv.is_none() {
                print!("{}", csv_string(&record.table)?);
            }
            write_results(&record, csv.as_deref(), json.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds {
            horizon,
            delta,
            known,
        } => {
            let instance = make_instance(vec![delta, 0.0])?;
            let rate = asymptotic_lower_bound(&instance, known);
            let log_t = (horizon as f64).ln();
            println!("lower_bound_rate = {rate}");
            println!("lower_bound_at_T = {}", rate * log_t);
            if known {
                println!(
                    "upper_bound_known = {}",
                    regret_upper_bound_known(horizon, delta)?
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let mut failed = 0;
            for (name, outcome) in selftest::run_selftest() {
                match outcome {
                    Ok(()) => println!("ok      {name}"),
                    Err(msg) => {
                        failed += 1;
                        println!("FAILED  {name}: {msg}");
                    }
                }
            }
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
