//! Batch CLI: train / eval / verify / summarize.
//!
//! Exit codes: 0 success, 1 verification violation, 2 configuration error,
//! 3 runtime failure.

use clap::{Parser, Subcommand};
use imax::harness;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "imax", version, about = "Competitive multi-agent RL with opponent imitation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured seed, writing metrics and checkpoints.
    Train {
        /// Path to a TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Continue from the newest checkpoints under the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a saved checkpoint directory.
    Eval {
        /// Checkpoint directory (e.g. runs/out/seed_1/ckpt_final).
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of evaluation episodes.
        #[arg(long, default_value_t = 32)]
        episodes: usize,
        /// Evaluation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the numerical verification suite and write a JSON report.
    Verify {
        /// Restrict to checks whose name contains this string.
        #[arg(long)]
        suite: Option<String>,
        /// Report path.
        #[arg(long, default_value = "verify_report.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarize finished run directories into a CSV table.
    Summarize {
        /// Run directories (each containing a manifest.json).
        dirs: Vec<PathBuf>,
        /// Optional CSV output path; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Configuration problems map to exit code 2, everything else
            // that reaches here is a runtime failure.
            if err.downcast_ref::<harness::ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Train { config, resume } => {
            let config = harness::load_config(&config)?;
            let manifest = harness::run_train(&config, resume)?;
            eprintln!(
                "run complete: {} seeds, artifacts in {}",
                manifest.seeds.len(),
                config.run.out_dir
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { checkpoint, episodes, seed } => {
            let report = harness::run_eval(&checkpoint, episodes, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, out, seed } => {
            let report = harness::run_verify(suite.as_deref(), seed)?;
            harness::write_report(&report, &out)?;
            for check in &report.checks {
                println!(
                    "{} {}: trials {}, violations {}, worst ratio {:.3e}, {} ms",
                    if check.passed() { "PASS" } else { "FAIL" },
                    check.check_name,
                    check.trials,
                    check.violations,
                    check.worst_ratio,
                    check.runtime_ms
                );
            }
            if report.violations() > 0 {
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Summarize { dirs, out } => {
            anyhow::ensure!(!dirs.is_empty(), "summarize needs at least one run directory");
            let refs: Vec<&std::path::Path> = dirs.iter().map(|p| p.as_path()).collect();
            let rows = harness::summarize(&refs)?;
            let csv = harness::to_csv(&rows);
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
