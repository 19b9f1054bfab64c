//! `fasthash` command-line driver.
//!
//! Exit codes: 0 success, 1 input error, 2 contract violation, 3 internal
//! error.

mod cli;
mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use fasthash::{Error, Parallelism};

use crate::cli::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Contract(_) | Error::NotSubmodular { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut mode = Parallelism::Parallel;
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if t == 1 {
            mode = Parallelism::Sequential;
        } else {
            fasthash::par::init_threads(t);
        }
    }

    let result = std::panic::catch_unwind(|| match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a, mode),
        Command::Encode(a) => commands::encode(a, mode),
        Command::Eval(a) => commands::eval(a, mode),
        Command::Inspect(a) => commands::inspect(a),
    });
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
