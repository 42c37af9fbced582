mod artifacts;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Session;
use crate::config::{Cli, RunConfig};

/// Exit status when a run completed but one of its checks failed.
const CHECK_FAILED: u8 = 2;

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = RunConfig::resolve(cli.command, cli.flags)?;
    let mut session = Session::open(cfg)?;
    let pass = session.run(cli.command)?;
    session.out.finish(&session.cfg, pass)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
