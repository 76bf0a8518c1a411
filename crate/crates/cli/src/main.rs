//! `dicke`: command-line front end of the extended Dicke battery library.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 failed computation.

mod args;
mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::{Context, Failure, Outcome};

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let file = config::load(cli.global.config.as_deref()).map_err(Failure::Config)?;
    let params = config::model(&cli.global, &file.model).map_err(Failure::Config)?;
    let out = cli.global.out.clone().or_else(|| file.run.out.clone());
    if let Some(path) = &out {
        config::check_writable(path).map_err(Failure::Config)?;
    }
    let ctx = Context {
        global: cli.global,
        run: file.run,
        params,
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Analytic(a) => commands::analytic(&ctx, a),
        Command::Potential(a) => commands::potential(&ctx, a),
        Command::Battery(a) => commands::battery(&ctx, a),
        Command::Scaling(a) => commands::scaling(&ctx, a),
        Command::Validate(a) => commands::validate(&ctx, a),
    }?;

    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match &out {
        Some(path) => {
            fs::write(path, &outcome.body).map_err(|e| {
                Failure::Compute(anyhow::anyhow!("cannot write {}: {e}", path.display()))
            })?;
            for m in &outcome.messages {
                println!("{m}");
            }
        }
        None => {
            std::io::stdout()
                .write_all(outcome.body.as_bytes())
                .map_err(|e| Failure::Compute(e.into()))?;
            for m in &outcome.messages {
                eprintln!("{m}");
            }
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(outcome) if outcome.success => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
