use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ens_core::scenario::{parse_overrides, parse_vary, run_scenario, run_sweep, ScenarioConfig};
use ens_core::verify::{run_all, verdicts};
use ens_core::EnsError;

#[derive(Parser)]
#[command(name = "ens", version, about = "Batch runner for the vorticity-divergence scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        /// Configuration file; optional when `--scenario <name>` is given.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides of the form `--key.subkey value` or `--key.subkey=value`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run one scenario for each value of a parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `key=v1,v2,...`
        #[arg(long)]
        vary: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run every preset scenario and report one verdict per acceptance criterion.
    Verify {
        #[arg(long, default_value = "out/verify")]
        out: PathBuf,
    },
}

fn load(config: Option<&PathBuf>, overrides: &[String]) -> Result<ScenarioConfig, EnsError> {
    let overrides = parse_overrides(overrides)?;
    match config {
        Some(path) => ScenarioConfig::from_file(path, &overrides),
        None => ScenarioConfig::from_toml_str("", &overrides),
    }
}

fn config_error(e: EnsError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let config = match load(config.as_ref(), &overrides) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            match run_scenario(&config) {
                Ok(summary) => {
                    print!("{}", summary.to_toml_string());
                    if let Some(e) = &summary.error {
                        eprintln!("run failed: {e}");
                    }
                    ExitCode::from(summary.exit_code() as u8)
                }
                Err(e @ EnsError::Config(_)) => config_error(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Sweep { config, vary, overrides } => {
            let (key, values) = match parse_vary(&vary) {
                Ok(v) => v,
                Err(e) => return config_error(e),
            };
            let config = match load(Some(&config), &overrides) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            match run_sweep(&config, &key, &values) {
                Ok(summaries) => {
                    for (v, s) in values.iter().zip(&summaries) {
                        println!("{} {key}={v}", if s.passed { "PASS" } else { "FAIL" });
                    }
                    ExitCode::from(if summaries.iter().all(|s| s.passed) { 0 } else { 1 })
                }
                Err(e @ EnsError::Config(_)) => config_error(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Verify { out } => match run_all(&out) {
            Ok(summaries) => {
                let verdicts = verdicts(&summaries);
                for v in &verdicts {
                    println!("{v}");
                }
                ExitCode::from(if verdicts.iter().all(|v| v.pass) { 0 } else { 1 })
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
