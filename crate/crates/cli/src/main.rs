//! `xjunction`: plan shuttling sequences, run excitation/phase ledgers,
//! fit and synthesize sideband data, and generate electrode waveforms.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit status classes.
#[derive(Debug)]
pub enum CliError {
    /// Missing or unreadable file (exit 1).
    Io(String),
    /// Bad input or failed check (exit 2).
    Validation(String),
    /// Infeasible constraints or a fit that did not converge (exit 3).
    Infeasible(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Validation(m) | CliError::Infeasible(m) => m,
        }
    }
}

pub type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => commands::plan(&cli, a),
        Command::Simulate(a) => commands::simulate(&cli, a),
        Command::Fit(a) => commands::fit(a),
        Command::Synth(a) => commands::synth(a),
        Command::Waveform(a) => commands::waveform(a),
        Command::Topology(a) => commands::topology(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
