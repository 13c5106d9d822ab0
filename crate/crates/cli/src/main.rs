//! `chsolve`: run conservative Camassa–Holm scenarios and property suites.

mod config;
mod runner;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "chsolve", about = "Conservative Camassa-Holm solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario described by a TOML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a property-check suite with a fixed seed.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0x5eed_cafe)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Invariants,
    Oracle,
    Lemma,
    Weakform,
    All,
}

fn run_checks(suite: Suite, seed: u64) -> anyhow::Result<bool> {
    use ch_core::checks;
    fn collect(
        which: Suite,
        seed: u64,
        results: &mut Vec<checks::CheckResult>,
    ) -> anyhow::Result<()> {
        match which {
            Suite::Invariants => results.extend(checks::invariants_suite(seed)?),
            Suite::Oracle => results.extend(checks::oracle_suite(3001)?),
            Suite::Lemma => {
                results.extend(checks::kernel_suite(seed, 50)?);
                results.extend(checks::lemma_suite(seed, 100, 1000, 200)?);
            }
            Suite::Weakform => results.extend(checks::weakform_suite(1200)?),
            Suite::All => {
                for s in [Suite::Invariants, Suite::Lemma, Suite::Oracle, Suite::Weakform] {
                    collect(s, seed, results)?;
                }
            }
        }
        Ok(())
    }
    let mut results = Vec::new();
    collect(suite, seed, &mut results)?;
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut all_pass = true;
    for r in &results {
        println!(
            "{:<width$}  {}  {}",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        all_pass &= r.pass;
    }
    println!(
        "{} of {} checks passed (seed {seed})",
        results.iter().filter(|r| r.pass).count(),
        results.len()
    );
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match config::RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e:#}");
                    return ExitCode::from(runner::EXIT_CONFIG as u8);
                }
            };
            match runner::run(&cfg) {
                Ok(code) => ExitCode::from(code as u8),
                Err(e) => {
                    eprintln!("run failed: {e:#}");
                    ExitCode::from(runner::EXIT_CONFIG as u8)
                }
            }
        }
        Command::Check { suite, seed } => match run_checks(suite, seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::FAILURE,
            Err(e) => {
                eprintln!("check failed to run: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
