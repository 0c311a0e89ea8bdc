use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use poisonbench_cli::suite::{run_suite, Fault};
use poisonbench_cli::sweep::{load_sweep, run_sweep};
use poisonbench_cli::{load_config, run_experiment, CliError};

/// Distributed momentum SGD under label poisoning.
///
/// Any config key can be overridden after the config path with
/// `--section.key=value`, e.g. `--hyper.seed=3`.
#[derive(Parser)]
#[command(name = "poisonbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config or a manifest.json.
    Run {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a grid of experiments and summarise the best aggregator per cell.
    Sweep {
        config: PathBuf,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check the contraction, impossibility and quadratic-instance results.
    Theory {
        /// Where to write the JSON report.
        #[arg(long, default_value = "theory_report.json")]
        out: PathBuf,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Parse and validate a config without running it.
    ValidateConfig {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    MeanAsFaba,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            let s = run_experiment(&cfg)?;
            println!(
                "wrote {} rows to {} (final test accuracy {:.4})",
                s.rows,
                s.output_dir.display(),
                s.final_test_acc
            );
            Ok(())
        }
        Command::Sweep { config, jobs, overrides } => {
            let sweep = load_sweep(&config, &overrides)?;
            let out = run_sweep(&sweep, jobs)?;
            for r in out.results.iter().filter(|r| r.outcome.is_err()) {
                eprintln!("cell {} / {}: {}", r.cell, r.aggregator, r.outcome.as_ref().unwrap_err());
            }
            println!("{} runs, {} failed; summary in {}", out.results.len(), out.failures, sweep.output_dir.display());
            if out.failures > 0 {
                return Err(CliError::Failure(format!("{} sweep runs failed", out.failures)));
            }
            Ok(())
        }
        Command::Theory { out, inject_fault } => {
            let fault = inject_fault.map(|FaultArg::MeanAsFaba| Fault::MeanAsFaba);
            let report = run_suite(fault)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Failure(e.to_string()))?;
            std::fs::write(&out, json + "\n")?;
            for c in &report.checks {
                println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.id);
            }
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Failure(format!("violated: {}", report.failed_ids().join(", "))))
            }
        }
        Command::ValidateConfig { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            println!("{}", serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Failure(e.to_string()))?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
