//! `dcsynth`: run profiling, segmented generation and evaluation experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or usage.

mod args;
mod commands;
mod experiment;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Marks errors caused by invalid configuration or arguments (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        e.is::<ConfigError>()
            || matches!(
                e.downcast_ref::<dcsynth_core::Error>(),
                Some(dcsynth_core::Error::InvalidConfig(_))
            )
    });
    if config {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if cli.verbose { "info" } else { "warn" }),
    )
    .init();

    let result = match cli.jobs {
        Some(0) => Err(anyhow::Error::new(ConfigError(
            "--jobs must be at least 1".into(),
        ))),
        jobs => {
            commands::set_cli_jobs(jobs);
            dispatch(cli.command)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Run(a) => commands::run(a),
        Command::Profile(a) => commands::profile(a),
        Command::Generate(a) => commands::generate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::ThresholdBench(a) => commands::threshold_bench(a),
        Command::NoiseSweep(a) => commands::noise_sweep(a),
        Command::Report(a) => commands::report(a),
    }
}
